#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "ctxsub/relation.hpp"

namespace ctxsub {

struct LexiconEntry {
    std::string key;
    std::optional<std::string> sense;
    RelationType relation;
    std::string target;
};

/// Counters for recoverable irregularities seen while loading.
struct IngestStats {
    std::size_t lines = 0;
    std::size_t uppercase_folded = 0;
    std::size_t multiword_skipped = 0;
};

/// key -> sense -> entries. Entries without a sense (DIST_NGH) live under the empty sense id.
class RelationLexicon {
public:
    using SenseMap = std::map<std::string, std::vector<LexiconEntry>>;

    void add(LexiconEntry entry);

    const std::map<std::string, SenseMap>& keys() const { return keys_; }
    std::size_t size() const { return size_; }
    bool empty() const { return size_ == 0; }

    /// Entries for (key, sense), file order. Empty when absent.
    const std::vector<LexiconEntry>& entries(const std::string& key, const std::string& sense) const;
    /// Entries without a sense (DIST_NGH) for the key.
    const std::vector<LexiconEntry>& unsensed(const std::string& key) const;
    /// Distinct sense ids of the key (excluding the unsensed bucket).
    std::vector<std::string> senses(const std::string& key) const;
    /// WordNet targets over every sense of the key.
    std::set<std::string> wordnet_targets(const std::string& key) const;

    IngestStats stats;

private:
    std::map<std::string, SenseMap> keys_;
    std::set<std::tuple<std::string, std::string, int, std::string>> seen_;
    std::size_t size_ = 0;
};

RelationLexicon load_lexicon(const std::string& path);

struct CapConfig {
    std::size_t per_relation = 10;
    std::size_t wordnet_total = 30;
    std::size_t grand_total = 40;
};

struct Target {
    std::string word;
    RelationType relation;
};

struct TargetSet {
    std::string key;
    std::optional<std::string> sense;
    std::vector<Target> targets;
    std::array<std::size_t, 5> counts{};
    bool dist_underfilled = false;

    std::size_t wordnet_count() const { return counts[0] + counts[1] + counts[2] + counts[3]; }
};

/// Either an assembled set or the relation types that had no targets.
struct AssembleResult {
    std::optional<TargetSet> set;
    std::vector<RelationType> missing;

    bool accepted() const { return set.has_value(); }
};

/// Builds the capped target set of (key, sense). DIST_NGH targets are taken from
/// `dist_override` when given, otherwise from the lexicon's unsensed entries of the key.
AssembleResult assemble_target_set(const std::string& key, const std::string& sense,
                                   const RelationLexicon& lexicon, const CapConfig& caps = {},
                                   const std::vector<std::string>* dist_override = nullptr);

struct Neighbor {
    std::string word;
    double score = 0.0;
};

struct NeighborList {
    std::string key;
    std::vector<Neighbor> neighbors;

    std::vector<std::string> words() const;
};

/// Sorts by non-increasing score with canonical ties, drops the key itself.
/// Throws ValidationError on a duplicate word or a score outside [-1, 1].
NeighborList normalize_neighbors(std::string key, std::vector<Neighbor> neighbors);

std::map<std::string, NeighborList> load_neighbors(const std::string& path, IngestStats* stats = nullptr);

struct DistSelection {
    std::vector<std::string> words;
    bool underfilled = false;
};

DistSelection dist_neighbors(const std::string& key, const NeighborList& neighbors,
                             const std::set<std::string>& wordnet_targets, std::size_t limit = 10);

}  // namespace ctxsub
