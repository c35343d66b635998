#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctxsub/corpus.hpp"
#include "ctxsub/lexicon.hpp"

namespace ctxsub {

class Backend;
struct SentenceEncoding;

/// One substitution unit: a test sentence, the target set of its key and a payload layer.
struct Trial {
    const TestSentence* sentence = nullptr;
    const TargetSet* target_set = nullptr;
    std::size_t layer = 0;
};

struct ScoredTarget {
    std::string word;
    RelationType relation;
    double score = 0.0;
};

struct RankedTargets {
    std::string sentence_id;
    std::string key;
    std::optional<std::string> sense;
    std::size_t layer = 0;
    std::vector<ScoredTarget> ranking;
};

using RelationShares = std::array<double, 5>;

std::vector<std::string> substitute(const TestSentence& sentence, const std::string& target);

/// Ranks the trial's targets by cosine between the key (original sentence) and the target
/// (substituted sentence) at the trial layer. Backend errors are rethrown naming the target.
RankedTargets rank_targets(const Trial& trial, Backend& backend);

/// Same ranking for several layers, encoding each sentence once.
std::vector<RankedTargets> rank_targets_layers(const TestSentence& sentence, const TargetSet& targets,
                                               std::span<const std::size_t> layers, Backend& backend);

/// Sorts by descending score with lexicographic ties.
void sort_ranking(std::vector<ScoredTarget>& ranking);

/// Share of rankings whose rank-1 target has each relation. Throws on empty input.
RelationShares p_at_1_by_relation(std::span<const RankedTargets> rankings);

/// Mean over `runs` of the P@1 shares of a random ranker; one uniform draw per trial per run.
RelationShares random_baseline(std::span<const TargetSet> target_sets, std::size_t runs, std::uint64_t seed);

/// Expected value of random_baseline: mean over trials of n_r / n_total.
RelationShares random_baseline_expectation(std::span<const TargetSet> target_sets);

}  // namespace ctxsub
