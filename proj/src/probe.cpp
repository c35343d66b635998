#include "ctxsub/probe.hpp"

#include <algorithm>

#include "ctxsub/backend.hpp"
#include "ctxsub/embedding.hpp"
#include "ctxsub/error.hpp"
#include "ctxsub/prng.hpp"

namespace ctxsub {

std::vector<std::string> substitute(const TestSentence& sentence, const std::string& target) {
    if (sentence.key_index >= sentence.tokens.size()) {
        throw ValidationError("key_index out of range in sentence '" + sentence.id + "'");
    }
    std::vector<std::string> tokens = sentence.tokens;
    tokens[sentence.key_index] = target;
    return tokens;
}

void sort_ranking(std::vector<ScoredTarget>& ranking) {
    std::sort(ranking.begin(), ranking.end(), [](const ScoredTarget& a, const ScoredTarget& b) {
        if (a.score != b.score) return a.score > b.score;
        return canonical_less(a.word, b.word);
    });
}

std::vector<RankedTargets> rank_targets_layers(const TestSentence& sentence, const TargetSet& targets,
                                               std::span<const std::size_t> layers, Backend& backend) {
    if (targets.key != sentence.key) {
        throw ValidationError("target set of '" + targets.key + "' used with sentence of '" + sentence.key + "'");
    }
    if (targets.sense && sentence.sense && *targets.sense != *sentence.sense) {
        throw ValidationError("sense mismatch in sentence '" + sentence.id + "'");
    }
    const SentenceEncoding original = encode(backend, sentence.tokens, sentence.id);

    std::vector<RankedTargets> out(layers.size());
    std::vector<WordVector> key_vectors;
    for (std::size_t li = 0; li < layers.size(); ++li) {
        out[li].sentence_id = sentence.id;
        out[li].key = sentence.key;
        out[li].sense = sentence.sense;
        out[li].layer = layers[li];
        out[li].ranking.reserve(targets.targets.size());
        key_vectors.push_back(word_repr(original, sentence.key_index, layers[li]));
    }

    for (const auto& target : targets.targets) {
        SentenceEncoding substituted;
        try {
            substituted = encode(backend, substitute(sentence, target.word), sentence.id + "/" + target.word);
        } catch (const BackendError& e) {
            throw BackendError("target '" + target.word + "' in sentence '" + sentence.id + "': " + e.what());
        }
        for (std::size_t li = 0; li < layers.size(); ++li) {
            const WordVector target_vector = word_repr(substituted, sentence.key_index, layers[li]);
            out[li].ranking.push_back(ScoredTarget{target.word, target.relation, cosine(key_vectors[li], target_vector)});
        }
    }
    for (auto& r : out) sort_ranking(r.ranking);
    return out;
}

RankedTargets rank_targets(const Trial& trial, Backend& backend) {
    const std::size_t layer = trial.layer;
    return std::move(rank_targets_layers(*trial.sentence, *trial.target_set, std::span(&layer, 1), backend).front());
}

RelationShares p_at_1_by_relation(std::span<const RankedTargets> rankings) {
    if (rankings.empty()) throw ValidationError("p_at_1_by_relation over no rankings");
    std::array<std::size_t, 5> top{};
    std::size_t counted = 0;
    for (const auto& r : rankings) {
        if (r.ranking.empty()) continue;
        ++top[index_of(r.ranking.front().relation)];
        ++counted;
    }
    RelationShares shares{};
    if (counted == 0) return shares;
    for (std::size_t i = 0; i < 5; ++i) shares[i] = static_cast<double>(top[i]) / static_cast<double>(counted);
    return shares;
}

RelationShares random_baseline(std::span<const TargetSet> target_sets, std::size_t runs, std::uint64_t seed) {
    if (runs == 0) throw ValidationError("random baseline needs at least one run");
    RelationShares mean{};
    std::size_t usable = 0;
    for (const auto& t : target_sets) usable += t.targets.empty() ? 0 : 1;
    if (usable == 0) return mean;

    auto rng = derive_stream(seed, "random_baseline");
    for (std::size_t run = 0; run < runs; ++run) {
        std::array<std::size_t, 5> top{};
        for (const auto& t : target_sets) {
            if (t.targets.empty()) continue;
            const auto pick = rng.below(t.targets.size());
            ++top[index_of(t.targets[pick].relation)];
        }
        for (std::size_t i = 0; i < 5; ++i) mean[i] += static_cast<double>(top[i]) / static_cast<double>(usable);
    }
    for (auto& m : mean) m /= static_cast<double>(runs);
    return mean;
}

RelationShares random_baseline_expectation(std::span<const TargetSet> target_sets) {
    RelationShares e{};
    std::size_t usable = 0;
    for (const auto& t : target_sets) {
        if (t.targets.empty()) continue;
        ++usable;
        std::array<std::size_t, 5> counts{};
        for (const auto& x : t.targets) ++counts[index_of(x.relation)];
        for (std::size_t i = 0; i < 5; ++i) {
            e[i] += static_cast<double>(counts[i]) / static_cast<double>(t.targets.size());
        }
    }
    if (usable) {
        for (auto& v : e) v /= static_cast<double>(usable);
    }
    return e;
}

}  // namespace ctxsub
