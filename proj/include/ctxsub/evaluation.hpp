#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ctxsub/relation.hpp"

namespace ctxsub {

struct RerankResult;

/// key -> WordNet relation -> words, all senses merged.
class GoldSet {
public:
    void add(const std::string& key, RelationType relation, const std::string& word);

    bool contains(const std::string& key) const { return entries_.count(key) != 0; }
    const std::set<std::string>& words(const std::string& key, RelationType relation) const;
    /// Union over the four relations.
    std::set<std::string> merged(const std::string& key) const;
    std::vector<RelationType> relations_of(const std::string& key, const std::string& word) const;
    std::size_t size() const { return entries_.size(); }

private:
    std::map<std::string, std::array<std::set<std::string>, 4>> entries_;
};

GoldSet load_gold(const std::string& path);
std::map<std::string, std::uint64_t> load_frequencies(const std::string& path);

/// |top-k ∩ gold| / k; a list shorter than k still divides by k.
double p_at_k(std::span<const std::string> ranked, const std::set<std::string>& gold, std::size_t k);

struct RelationPrecision {
    std::array<double, 4> p_at_1{};
    std::size_t evaluated = 0;
    std::size_t missing_gold = 0;
};

/// For each WordNet relation, the share of keys whose rank-1 word is gold under it.
RelationPrecision p_at_1_by_relation_type(std::span<const RerankResult> results, const GoldSet& gold);

/// Sort by frequency descending (ties canonical); the first ceil(N/2) keys are "high".
std::pair<std::vector<std::string>, std::vector<std::string>> frequency_split(
    std::span<const std::string> keys, const std::map<std::string, std::uint64_t>& frequencies);

/// Two-sided paired Wilcoxon signed-rank p-value. Exact for up to 25 non-zero differences,
/// normal approximation with tie and continuity corrections above. All-zero differences give 1.
double wilcoxon_paired(std::span<const double> x, std::span<const double> y);

inline constexpr std::size_t kWilcoxonExactLimit = 25;
inline constexpr double kSignificanceLevel = 0.01;

}  // namespace ctxsub
