#include "ctxsub/corpus.hpp"

#include <algorithm>
#include <numeric>

#include "ctxsub/backend.hpp"
#include "ctxsub/embedding.hpp"
#include "ctxsub/error.hpp"
#include "ctxsub/io.hpp"
#include "ctxsub/prng.hpp"
#include "ctxsub/relation.hpp"

namespace ctxsub {

std::string_view to_string(SelectionStrategy s) {
    switch (s) {
        case SelectionStrategy::Random: return "random";
        case SelectionStrategy::ClosestAvg: return "closest_avg";
        case SelectionStrategy::FarthestAvg: return "farthest_avg";
        case SelectionStrategy::Uniform: return "uniform";
    }
    return "?";
}

std::optional<SelectionStrategy> parse_strategy(std::string_view s) {
    for (auto v : {SelectionStrategy::Random, SelectionStrategy::ClosestAvg, SelectionStrategy::FarthestAvg,
                   SelectionStrategy::Uniform}) {
        if (to_string(v) == s) return v;
    }
    return std::nullopt;
}

std::vector<TestSentence> load_sense_tagged(const std::string& path, std::size_t per_sense_cap) {
    std::vector<TestSentence> out;
    std::map<std::pair<std::string, std::string>, std::size_t> per_sense;
    for_each_json_line(path, [&](const json& j, std::size_t line) {
        TestSentence s;
        s.id = require_string(j, "id", path, line);
        s.key = to_lower(require_string(j, "key", path, line));
        s.sense = optional_string(j, "sense", path, line);
        auto toks = j.find("tokens");
        if (toks == j.end() || !toks->is_array()) throw ParseError(path, line, "field 'tokens' must be an array");
        for (const auto& t : *toks) {
            if (!t.is_string()) throw ParseError(path, line, "tokens must be strings");
            s.tokens.push_back(t.get<std::string>());
        }
        auto ki = j.find("key_index");
        if (ki == j.end() || !ki->is_number_integer()) throw ParseError(path, line, "field 'key_index' must be an integer");
        const auto index = ki->get<long long>();
        if (index < 0 || static_cast<std::size_t>(index) >= s.tokens.size()) {
            throw ValidationError(path + ":" + std::to_string(line) + ": key_index " + std::to_string(index) +
                                  " out of range for " + std::to_string(s.tokens.size()) + " tokens");
        }
        s.key_index = static_cast<std::size_t>(index);
        if (to_lower(s.tokens[s.key_index]) != s.key) {
            throw ValidationError(path + ":" + std::to_string(line) + ": token '" + s.tokens[s.key_index] +
                                  "' at key_index does not match key '" + s.key + "'");
        }
        auto& count = per_sense[{s.key, s.sense.value_or("")}];
        if (count >= per_sense_cap) return;
        ++count;
        out.push_back(std::move(s));
    });
    return out;
}

RawCorpus::RawCorpus(std::vector<std::vector<std::string>> sentences) : sentences_(std::move(sentences)) {
    for (std::size_t i = 0; i < sentences_.size(); ++i) {
        std::vector<std::string> seen;
        for (const auto& t : sentences_[i]) {
            auto w = to_lower(t);
            if (std::find(seen.begin(), seen.end(), w) != seen.end()) continue;
            seen.push_back(w);
            index_[w].push_back(i);
        }
    }
}

RawCorpus RawCorpus::load(const std::string& path) {
    std::vector<std::vector<std::string>> sentences;
    for (const auto& line : read_lines(path)) sentences.push_back(split_tokens(line));
    return RawCorpus(std::move(sentences));
}

const std::vector<std::size_t>& RawCorpus::occurrences(const std::string& word) const {
    static const std::vector<std::size_t> none;
    auto it = index_.find(to_lower(word));
    return it == index_.end() ? none : it->second;
}

namespace {

std::string sentence_id(const std::string& key, std::size_t line_index) {
    std::string n = std::to_string(line_index + 1);
    if (n.size() < 8) n.insert(0, 8 - n.size(), '0');
    return key + "@" + n;
}

}  // namespace

std::vector<TestSentence> sample_raw_sentences(const RawCorpus& corpus, const std::string& key,
                                               const SampleConfig& cfg) {
    if (cfg.n_sent == 0) throw ValidationError("n_sent must be >= 1");
    if (cfg.min_len > cfg.max_len) throw ValidationError("min_len must not exceed max_len");
    const std::string folded = to_lower(key);

    std::vector<std::size_t> eligible;
    for (std::size_t line : corpus.occurrences(folded)) {
        const auto len = corpus.sentence(line).size();
        if (len >= cfg.min_len && len <= cfg.max_len) eligible.push_back(line);
    }

    // Partial Fisher-Yates: the first n_sent slots become a uniform sample without replacement.
    auto rng = derive_stream(cfg.seed, "sample_raw_sentences/" + folded);
    const std::size_t take = std::min(cfg.n_sent, eligible.size());
    for (std::size_t i = 0; i < take; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(eligible.size() - i));
        std::swap(eligible[i], eligible[j]);
    }
    eligible.resize(take);
    std::sort(eligible.begin(), eligible.end());

    std::vector<TestSentence> out;
    out.reserve(take);
    for (std::size_t line : eligible) {
        const auto& toks = corpus.sentence(line);
        TestSentence s;
        s.id = sentence_id(folded, line);
        s.tokens = toks;
        s.key = folded;
        for (std::size_t i = 0; i < toks.size(); ++i) {
            if (to_lower(toks[i]) == folded) {
                s.key_index = i;
                break;
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<TestSentence> sample_raw_sentences(const std::string& corpus_path, const std::string& key,
                                               const SampleConfig& cfg) {
    return sample_raw_sentences(RawCorpus::load(corpus_path), key, cfg);
}

std::vector<std::size_t> select_by_similarity(std::span<const std::string> ids, std::span<const double> similarity,
                                              std::size_t n_c, SelectionStrategy strategy, std::uint64_t seed,
                                              const std::string& stream_label) {
    if (ids.size() != similarity.size()) throw ValidationError("ids and similarities differ in length");
    const std::size_t m = ids.size();
    std::vector<std::size_t> by_id(m);
    std::iota(by_id.begin(), by_id.end(), std::size_t{0});
    std::sort(by_id.begin(), by_id.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
    if (n_c >= m) return by_id;
    if (n_c == 0) return {};

    // Ascending similarity, ties by id.
    std::vector<std::size_t> ascending = by_id;
    std::stable_sort(ascending.begin(), ascending.end(),
                     [&](std::size_t a, std::size_t b) { return similarity[a] < similarity[b]; });

    std::vector<std::size_t> chosen;
    switch (strategy) {
        case SelectionStrategy::Random: {
            auto rng = derive_stream(seed, stream_label);
            std::vector<std::size_t> pool = by_id;
            for (std::size_t i = 0; i < n_c; ++i) {
                const auto j = i + static_cast<std::size_t>(rng.below(m - i));
                std::swap(pool[i], pool[j]);
            }
            chosen.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_c));
            break;
        }
        case SelectionStrategy::ClosestAvg: {
            std::vector<std::size_t> descending = by_id;
            std::stable_sort(descending.begin(), descending.end(),
                             [&](std::size_t a, std::size_t b) { return similarity[a] > similarity[b]; });
            chosen.assign(descending.begin(), descending.begin() + static_cast<std::ptrdiff_t>(n_c));
            break;
        }
        case SelectionStrategy::FarthestAvg:
            chosen.assign(ascending.begin(), ascending.begin() + static_cast<std::ptrdiff_t>(n_c));
            break;
        case SelectionStrategy::Uniform: {
            std::vector<bool> used(m, false);
            for (std::size_t i = 0; i < n_c; ++i) {
                // round(i * (m - 1) / (n_c - 1)), half away from zero, in integers.
                std::size_t pos = (m - 1) / 2 + ((m - 1) % 2);
                if (n_c > 1) {
                    const std::size_t num = i * (m - 1);
                    const std::size_t den = n_c - 1;
                    pos = (2 * num + den) / (2 * den);
                }
                while (pos < m && used[pos]) ++pos;
                if (pos >= m) throw ValidationError("uniform selection ran past the candidate list");
                used[pos] = true;
                chosen.push_back(ascending[pos]);
            }
            break;
        }
    }
    std::sort(chosen.begin(), chosen.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
    return chosen;
}

std::vector<TestSentence> select_test_sentences(std::span<const TestSentence> candidates, const std::string& key,
                                                std::size_t n_c, SelectionStrategy strategy, Backend& backend,
                                                std::size_t layer, std::uint64_t seed) {
    if (candidates.empty()) return {};
    std::vector<std::string> ids;
    ids.reserve(candidates.size());
    for (const auto& c : candidates) ids.push_back(c.id);

    std::vector<double> similarity(candidates.size(), 0.0);
    // Full selections and random choice do not need vectors.
    const bool needs_vectors = n_c < candidates.size() && strategy != SelectionStrategy::Random;
    if (needs_vectors) {
        std::vector<WordVector> vecs;
        vecs.reserve(candidates.size());
        for (const auto& c : candidates) {
            vecs.push_back(word_repr(encode(backend, c.tokens, c.id), c.key_index, layer));
        }
        // Accumulate in id order.
        std::vector<std::size_t> order(candidates.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
        const std::size_t dim = vecs.front().values.size();
        std::vector<double> acc(dim, 0.0);
        for (auto i : order) {
            for (std::size_t d = 0; d < dim; ++d) acc[d] += vecs[i].values[d];
        }
        WordVector centroid;
        centroid.layer = layer;
        centroid.values.resize(dim);
        for (std::size_t d = 0; d < dim; ++d) {
            centroid.values[d] = static_cast<float>(acc[d] / static_cast<double>(vecs.size()));
        }
        for (std::size_t i = 0; i < vecs.size(); ++i) similarity[i] = cosine(vecs[i], centroid);
    }

    const auto picked = select_by_similarity(ids, similarity, n_c, strategy, seed,
                                             "select_test_sentences/" + to_lower(key));
    std::vector<TestSentence> out;
    out.reserve(picked.size());
    for (auto i : picked) out.push_back(candidates[i]);
    return out;
}

}  // namespace ctxsub
