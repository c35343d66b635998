#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctxsub/corpus.hpp"
#include "ctxsub/embedding.hpp"

namespace ctxsub {

class Backend;

enum class FusionMethod { EarlyAvg, EarlyMax, EarlyMin, Borda, Condorcet, Rrf, CombSum };
enum class EarlyOp { Avg, Max, Min };

std::string_view to_string(FusionMethod m);
std::optional<FusionMethod> parse_fusion(std::string_view s);
bool is_early(FusionMethod m);
EarlyOp early_op(FusionMethod m);

inline constexpr double kDefaultRrfK = 60.0;

struct ScoredItem {
    std::string item;
    double score = 0.0;
};

using Ranking = std::vector<std::string>;

/// Descending score, ties by canonical word order.
void sort_scored(std::vector<ScoredItem>& items);

WordVector early_fuse(std::span<const WordVector> vectors, EarlyOp op);

std::vector<ScoredItem> borda_fuse(std::span<const Ranking> rankings);
/// Copeland score (pairwise wins minus losses), Borda points as tie-break, then canonical order.
std::vector<ScoredItem> condorcet_fuse(std::span<const Ranking> rankings);
std::vector<ScoredItem> rrf_fuse(std::span<const Ranking> rankings, double k = kDefaultRrfK);
std::vector<double> zero_one_normalize(std::span<const double> scores);
/// Zero-one normalizes each list, then sums per item.
std::vector<ScoredItem> combsum_fuse(std::span<const std::vector<ScoredItem>> score_lists);

struct RerankResult {
    std::string key;
    FusionMethod method = FusionMethod::EarlyAvg;
    std::size_t layer = 0;
    /// Reranked words; items without context sit at the tail with a NaN score.
    std::vector<ScoredItem> ranked;
    std::vector<std::string> no_context;

    std::vector<std::string> words() const;
};

using SentencePool = std::map<std::string, std::vector<TestSentence>>;

/// Type-level vector per word by early fusion of its occurrences; neighbors ordered by cosine
/// with the key's type vector.
RerankResult rerank_early(const std::string& key, std::span<const std::string> neighbors,
                          std::span<const TestSentence> key_sentences, const SentencePool& neighbor_sentences,
                          Backend& backend, std::size_t layer, EarlyOp op);

/// One ranking of every neighbor per key sentence, by substitution into that sentence.
std::vector<std::vector<ScoredItem>> per_sentence_rankings(const std::string& key,
                                                           std::span<const std::string> neighbors,
                                                           std::span<const TestSentence> key_sentences,
                                                           Backend& backend, std::size_t layer);

/// Merges per-sentence rankings with a late fusion method.
std::vector<ScoredItem> late_fuse(std::span<const std::vector<ScoredItem>> per_sentence, FusionMethod method,
                                  double rrf_k = kDefaultRrfK);

RerankResult rerank_late(const std::string& key, std::span<const std::string> neighbors,
                         std::span<const TestSentence> key_sentences, Backend& backend, std::size_t layer,
                         FusionMethod method, double rrf_k = kDefaultRrfK);

}  // namespace ctxsub
