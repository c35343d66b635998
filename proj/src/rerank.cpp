#include "ctxsub/rerank.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_map>

#include "ctxsub/backend.hpp"
#include "ctxsub/error.hpp"
#include "ctxsub/probe.hpp"
#include "ctxsub/relation.hpp"

namespace ctxsub {

std::string_view to_string(FusionMethod m) {
    switch (m) {
        case FusionMethod::EarlyAvg: return "average";
        case FusionMethod::EarlyMax: return "max";
        case FusionMethod::EarlyMin: return "min";
        case FusionMethod::Borda: return "borda";
        case FusionMethod::Condorcet: return "condorcet";
        case FusionMethod::Rrf: return "rrf";
        case FusionMethod::CombSum: return "combsum";
    }
    return "?";
}

std::optional<FusionMethod> parse_fusion(std::string_view s) {
    for (auto m : {FusionMethod::EarlyAvg, FusionMethod::EarlyMax, FusionMethod::EarlyMin, FusionMethod::Borda,
                   FusionMethod::Condorcet, FusionMethod::Rrf, FusionMethod::CombSum}) {
        if (to_string(m) == s) return m;
    }
    return std::nullopt;
}

bool is_early(FusionMethod m) {
    return m == FusionMethod::EarlyAvg || m == FusionMethod::EarlyMax || m == FusionMethod::EarlyMin;
}

EarlyOp early_op(FusionMethod m) {
    switch (m) {
        case FusionMethod::EarlyMax: return EarlyOp::Max;
        case FusionMethod::EarlyMin: return EarlyOp::Min;
        default: return EarlyOp::Avg;
    }
}

void sort_scored(std::vector<ScoredItem>& items) {
    std::sort(items.begin(), items.end(), [](const ScoredItem& a, const ScoredItem& b) {
        if (a.score != b.score) return a.score > b.score;
        return canonical_less(a.item, b.item);
    });
}

WordVector early_fuse(std::span<const WordVector> vectors, EarlyOp op) {
    if (vectors.empty()) throw ValidationError("early fusion of no vectors");
    const std::size_t dim = vectors.front().values.size();
    const std::size_t layer = vectors.front().layer;
    for (const auto& v : vectors) {
        if (v.values.size() != dim || v.layer != layer) throw ValidationError("early fusion over mixed dims or layers");
    }
    WordVector out;
    out.layer = layer;
    out.values.resize(dim);
    for (std::size_t d = 0; d < dim; ++d) {
        if (op == EarlyOp::Avg) {
            double acc = 0.0;
            for (const auto& v : vectors) acc += v.values[d];
            out.values[d] = static_cast<float>(acc / static_cast<double>(vectors.size()));
        } else {
            float x = vectors.front().values[d];
            for (const auto& v : vectors) x = op == EarlyOp::Max ? std::max(x, v.values[d]) : std::min(x, v.values[d]);
            out.values[d] = x;
        }
    }
    return out;
}

namespace {

/// Validates that every ranking is a permutation of the first one; returns the sorted item set.
std::vector<std::string> common_items(std::span<const Ranking> rankings) {
    if (rankings.empty()) throw ValidationError("fusion over no rankings");
    std::vector<std::string> items(rankings.front().begin(), rankings.front().end());
    std::sort(items.begin(), items.end());
    if (std::adjacent_find(items.begin(), items.end()) != items.end()) {
        throw ValidationError("ranking contains a duplicate item");
    }
    for (const auto& r : rankings) {
        std::vector<std::string> other(r.begin(), r.end());
        std::sort(other.begin(), other.end());
        if (other != items) throw ValidationError("rankings are over different item sets");
    }
    return items;
}

/// rank[list][item index] (0-based) with items indexed in sorted order.
std::vector<std::vector<std::size_t>> positions(std::span<const Ranking> rankings,
                                                const std::vector<std::string>& items) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < items.size(); ++i) index[items[i]] = i;
    std::vector<std::vector<std::size_t>> pos(rankings.size(), std::vector<std::size_t>(items.size()));
    for (std::size_t l = 0; l < rankings.size(); ++l) {
        for (std::size_t r = 0; r < rankings[l].size(); ++r) pos[l][index.at(rankings[l][r])] = r;
    }
    return pos;
}

std::vector<double> borda_points(const std::vector<std::vector<std::size_t>>& pos, std::size_t m) {
    std::vector<double> points(m, 0.0);
    for (const auto& list : pos) {
        for (std::size_t i = 0; i < m; ++i) points[i] += static_cast<double>(m - 1 - list[i]);
    }
    return points;
}

}  // namespace

std::vector<ScoredItem> borda_fuse(std::span<const Ranking> rankings) {
    const auto items = common_items(rankings);
    const auto points = borda_points(positions(rankings, items), items.size());
    std::vector<ScoredItem> out;
    for (std::size_t i = 0; i < items.size(); ++i) out.push_back({items[i], points[i]});
    sort_scored(out);
    return out;
}

std::vector<ScoredItem> condorcet_fuse(std::span<const Ranking> rankings) {
    const auto items = common_items(rankings);
    const std::size_t m = items.size();
    const auto pos = positions(rankings, items);
    const auto points = borda_points(pos, m);

    std::vector<long> copeland(m, 0);
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a + 1; b < m; ++b) {
            std::size_t a_above = 0;
            for (const auto& list : pos) a_above += list[a] < list[b] ? 1 : 0;
            const std::size_t b_above = pos.size() - a_above;
            if (a_above > b_above) {
                ++copeland[a];
                --copeland[b];
            } else if (b_above > a_above) {
                ++copeland[b];
                --copeland[a];
            }
        }
    }
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (copeland[a] != copeland[b]) return copeland[a] > copeland[b];
        if (points[a] != points[b]) return points[a] > points[b];
        return canonical_less(items[a], items[b]);
    });
    std::vector<ScoredItem> out;
    for (auto i : order) out.push_back({items[i], static_cast<double>(copeland[i])});
    return out;
}

std::vector<ScoredItem> rrf_fuse(std::span<const Ranking> rankings, double k) {
    if (!(k > 0.0)) throw ValidationError("RRF constant must be > 0");
    const auto items = common_items(rankings);
    const auto pos = positions(rankings, items);
    std::vector<ScoredItem> out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        double score = 0.0;
        for (const auto& list : pos) score += 1.0 / (k + static_cast<double>(list[i] + 1));
        out.push_back({items[i], score});
    }
    sort_scored(out);
    return out;
}

std::vector<double> zero_one_normalize(std::span<const double> scores) {
    if (scores.empty()) throw ValidationError("zero-one normalization of an empty list");
    const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
    const double min = *lo;
    const double range = *hi - *lo;
    std::vector<double> out(scores.size(), 0.0);
    if (range == 0.0) return out;
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = (scores[i] - min) / range;
    return out;
}

std::vector<ScoredItem> combsum_fuse(std::span<const std::vector<ScoredItem>> score_lists) {
    std::vector<Ranking> as_rankings;
    for (const auto& list : score_lists) {
        Ranking r;
        for (const auto& s : list) r.push_back(s.item);
        as_rankings.push_back(std::move(r));
    }
    const auto items = common_items(as_rankings);
    std::unordered_map<std::string, double> total;
    for (const auto& item : items) total[item] = 0.0;
    for (const auto& list : score_lists) {
        std::vector<double> raw;
        for (const auto& s : list) raw.push_back(s.score);
        const auto norm = zero_one_normalize(raw);
        for (std::size_t i = 0; i < list.size(); ++i) total[list[i].item] += norm[i];
    }
    std::vector<ScoredItem> out;
    for (const auto& item : items) out.push_back({item, total[item]});
    sort_scored(out);
    return out;
}

std::vector<std::string> RerankResult::words() const {
    std::vector<std::string> out;
    for (const auto& r : ranked) out.push_back(r.item);
    return out;
}

namespace {

WordVector type_vector(std::span<const TestSentence> sentences, Backend& backend, std::size_t layer, EarlyOp op) {
    std::vector<WordVector> occurrences;
    occurrences.reserve(sentences.size());
    for (const auto& s : sentences) occurrences.push_back(word_repr(encode(backend, s.tokens, s.id), s.key_index, layer));
    return early_fuse(occurrences, op);
}

}  // namespace

RerankResult rerank_early(const std::string& key, std::span<const std::string> neighbors,
                          std::span<const TestSentence> key_sentences, const SentencePool& neighbor_sentences,
                          Backend& backend, std::size_t layer, EarlyOp op) {
    if (key_sentences.empty()) throw ValidationError("no test sentences for key '" + key + "'");
    RerankResult result;
    result.key = key;
    result.layer = layer;
    result.method = op == EarlyOp::Avg ? FusionMethod::EarlyAvg
                    : op == EarlyOp::Max ? FusionMethod::EarlyMax
                                         : FusionMethod::EarlyMin;

    const WordVector key_vector = type_vector(key_sentences, backend, layer, op);
    for (const auto& word : neighbors) {
        std::span<const TestSentence> own;
        if (word == key) {
            own = key_sentences;
        } else if (auto it = neighbor_sentences.find(word); it != neighbor_sentences.end()) {
            own = it->second;
        }
        if (own.empty()) {
            result.no_context.push_back(word);
            continue;
        }
        result.ranked.push_back({word, cosine(key_vector, type_vector(own, backend, layer, op))});
    }
    sort_scored(result.ranked);
    for (const auto& word : result.no_context) {
        result.ranked.push_back({word, std::numeric_limits<double>::quiet_NaN()});
    }
    return result;
}

std::vector<std::vector<ScoredItem>> per_sentence_rankings(const std::string& key,
                                                           std::span<const std::string> neighbors,
                                                           std::span<const TestSentence> key_sentences,
                                                           Backend& backend, std::size_t layer) {
    // Neighbors play the role of targets in the substitution probe; relation labels are unused.
    TargetSet targets;
    targets.key = key;
    for (const auto& n : neighbors) targets.targets.push_back({n, RelationType::DistNgh});

    std::vector<std::vector<ScoredItem>> out;
    out.reserve(key_sentences.size());
    for (const auto& sentence : key_sentences) {
        TestSentence unsensed = sentence;
        unsensed.sense.reset();
        const Trial trial{&unsensed, &targets, layer};
        const RankedTargets ranked = rank_targets(trial, backend);
        std::vector<ScoredItem> list;
        for (const auto& t : ranked.ranking) list.push_back({t.word, t.score});
        out.push_back(std::move(list));
    }
    return out;
}

std::vector<ScoredItem> late_fuse(std::span<const std::vector<ScoredItem>> per_sentence, FusionMethod method,
                                  double rrf_k) {
    if (method == FusionMethod::CombSum) return combsum_fuse(per_sentence);
    std::vector<Ranking> rankings;
    for (const auto& list : per_sentence) {
        Ranking r;
        for (const auto& s : list) r.push_back(s.item);
        rankings.push_back(std::move(r));
    }
    switch (method) {
        case FusionMethod::Borda: return borda_fuse(rankings);
        case FusionMethod::Condorcet: return condorcet_fuse(rankings);
        case FusionMethod::Rrf: return rrf_fuse(rankings, rrf_k);
        default: throw ValidationError(std::string(to_string(method)) + " is not a late fusion method");
    }
}

RerankResult rerank_late(const std::string& key, std::span<const std::string> neighbors,
                         std::span<const TestSentence> key_sentences, Backend& backend, std::size_t layer,
                         FusionMethod method, double rrf_k) {
    if (key_sentences.empty()) throw ValidationError("no test sentences for key '" + key + "'");
    RerankResult result;
    result.key = key;
    result.method = method;
    result.layer = layer;
    if (neighbors.empty()) return result;
    const auto lists = per_sentence_rankings(key, neighbors, key_sentences, backend, layer);
    result.ranked = late_fuse(lists, method, rrf_k);
    return result;
}

}  // namespace ctxsub
