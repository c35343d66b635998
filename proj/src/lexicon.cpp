#include "ctxsub/lexicon.hpp"

#include <algorithm>
#include <cmath>

#include "ctxsub/error.hpp"
#include "ctxsub/io.hpp"

namespace ctxsub {

namespace {

const std::vector<LexiconEntry> kNoEntries;

bool is_multiword(std::string_view w) {
    return w.find('_') != std::string_view::npos || w.find(' ') != std::string_view::npos;
}

}  // namespace

void RelationLexicon::add(LexiconEntry entry) {
    auto tuple = std::make_tuple(entry.key, entry.sense.value_or(""), static_cast<int>(entry.relation), entry.target);
    if (!seen_.insert(tuple).second) {
        throw ValidationError("duplicate lexicon entry (" + entry.key + ", " + entry.sense.value_or("null") + ", " +
                              std::string(to_string(entry.relation)) + ", " + entry.target + ")");
    }
    const std::string sense = entry.sense.value_or("");
    keys_[entry.key][sense].push_back(std::move(entry));
    ++size_;
}

const std::vector<LexiconEntry>& RelationLexicon::entries(const std::string& key, const std::string& sense) const {
    auto k = keys_.find(key);
    if (k == keys_.end()) return kNoEntries;
    auto s = k->second.find(sense);
    return s == k->second.end() ? kNoEntries : s->second;
}

const std::vector<LexiconEntry>& RelationLexicon::unsensed(const std::string& key) const {
    return entries(key, "");
}

std::vector<std::string> RelationLexicon::senses(const std::string& key) const {
    std::vector<std::string> out;
    auto k = keys_.find(key);
    if (k == keys_.end()) return out;
    for (const auto& [sense, list] : k->second) {
        if (!sense.empty()) out.push_back(sense);
    }
    return out;
}

std::set<std::string> RelationLexicon::wordnet_targets(const std::string& key) const {
    std::set<std::string> out;
    auto k = keys_.find(key);
    if (k == keys_.end()) return out;
    for (const auto& [sense, list] : k->second) {
        for (const auto& e : list) {
            if (is_wordnet(e.relation)) out.insert(e.target);
        }
    }
    return out;
}

RelationLexicon load_lexicon(const std::string& path) {
    RelationLexicon lex;
    for_each_json_line(path, [&](const json& j, std::size_t line) {
        ++lex.stats.lines;
        std::string key = require_string(j, "key", path, line);
        std::optional<std::string> sense = optional_string(j, "sense", path, line);
        const std::string rel_text = require_string(j, "relation", path, line);
        std::string target = require_string(j, "target", path, line);

        auto relation = parse_relation(rel_text);
        if (!relation) throw ParseError(path, line, "unknown relation '" + rel_text + "'");
        if (key.empty() || target.empty()) throw ParseError(path, line, "empty key or target");
        if (sense && sense->empty()) throw ParseError(path, line, "sense must be null or non-empty");
        if (*relation == RelationType::DistNgh && sense) {
            throw ParseError(path, line, "dist entries carry no sense");
        }
        if (*relation != RelationType::DistNgh && !sense) {
            throw ParseError(path, line, "WordNet relation entries need a sense");
        }

        if (has_upper(key) || has_upper(target)) {
            ++lex.stats.uppercase_folded;
            key = to_lower(key);
            target = to_lower(target);
        }
        if (is_multiword(key) || is_multiword(target)) {
            ++lex.stats.multiword_skipped;
            return;
        }
        if (target == key) throw ValidationError(path + ":" + std::to_string(line) + ": target equals key");
        try {
            lex.add(LexiconEntry{std::move(key), std::move(sense), *relation, std::move(target)});
        } catch (const ValidationError& e) {
            throw ValidationError(path + ":" + std::to_string(line) + ": " + e.what());
        }
    });
    return lex;
}

AssembleResult assemble_target_set(const std::string& key, const std::string& sense, const RelationLexicon& lexicon,
                                   const CapConfig& caps, const std::vector<std::string>* dist_override) {
    std::array<std::vector<std::string>, 5> by_relation;
    std::set<std::string> taken;
    taken.insert(key);

    for (const auto& e : lexicon.entries(key, sense)) {
        if (!is_wordnet(e.relation)) continue;
        by_relation[index_of(e.relation)].push_back(e.target);
    }
    // Deduplicate across relations in relation order, then cap each relation in file order.
    for (RelationType r : kWordNetRelations) {
        auto& list = by_relation[index_of(r)];
        std::vector<std::string> kept;
        for (auto& w : list) {
            if (kept.size() >= caps.per_relation) break;
            if (taken.insert(w).second) kept.push_back(std::move(w));
        }
        list = std::move(kept);
    }

    auto total_wordnet = [&] {
        std::size_t t = 0;
        for (RelationType r : kWordNetRelations) t += by_relation[index_of(r)].size();
        return t;
    };
    for (RelationType r : {RelationType::Hypo, RelationType::Cohyp}) {
        auto& list = by_relation[index_of(r)];
        while (total_wordnet() > caps.wordnet_total && list.size() > 1) {
            list.pop_back();
        }
    }

    bool underfilled = false;
    {
        std::vector<std::string> dist_source;
        if (dist_override) {
            dist_source = *dist_override;
        } else {
            for (const auto& e : lexicon.unsensed(key)) {
                if (e.relation == RelationType::DistNgh) dist_source.push_back(e.target);
            }
        }
        const std::size_t room = caps.grand_total > total_wordnet() ? caps.grand_total - total_wordnet() : 0;
        const std::size_t limit = std::min(caps.per_relation, room);
        auto& dist = by_relation[index_of(RelationType::DistNgh)];
        for (auto& w : dist_source) {
            if (dist.size() >= limit) break;
            if (taken.insert(w).second) dist.push_back(std::move(w));
        }
        underfilled = dist.size() < caps.per_relation;
    }

    AssembleResult result;
    for (RelationType r : kAllRelations) {
        if (by_relation[index_of(r)].empty()) result.missing.push_back(r);
    }
    if (!result.missing.empty()) return result;

    TargetSet set;
    set.key = key;
    if (!sense.empty()) set.sense = sense;
    set.dist_underfilled = underfilled;
    for (RelationType r : kAllRelations) {
        for (auto& w : by_relation[index_of(r)]) set.targets.push_back(Target{std::move(w), r});
        set.counts[index_of(r)] = by_relation[index_of(r)].size();
    }
    result.set = std::move(set);
    return result;
}

std::vector<std::string> NeighborList::words() const {
    std::vector<std::string> out;
    out.reserve(neighbors.size());
    for (const auto& n : neighbors) out.push_back(n.word);
    return out;
}

NeighborList normalize_neighbors(std::string key, std::vector<Neighbor> neighbors) {
    NeighborList list;
    list.key = std::move(key);
    std::set<std::string> seen;
    for (auto& n : neighbors) {
        if (!std::isfinite(n.score) || n.score < -1.0 || n.score > 1.0) {
            throw ValidationError("neighbor score out of [-1, 1] for " + list.key + "/" + n.word);
        }
        if (n.word == list.key) continue;
        if (!seen.insert(n.word).second) throw ValidationError("duplicate neighbor " + n.word + " of " + list.key);
        list.neighbors.push_back(std::move(n));
    }
    std::stable_sort(list.neighbors.begin(), list.neighbors.end(), [](const Neighbor& a, const Neighbor& b) {
        if (a.score != b.score) return a.score > b.score;
        return canonical_less(a.word, b.word);
    });
    return list;
}

std::map<std::string, NeighborList> load_neighbors(const std::string& path, IngestStats* stats) {
    std::map<std::string, NeighborList> out;
    IngestStats local;
    for_each_json_line(path, [&](const json& j, std::size_t line) {
        ++local.lines;
        std::string key = require_string(j, "key", path, line);
        auto it = j.find("neighbors");
        if (it == j.end() || !it->is_array()) throw ParseError(path, line, "field 'neighbors' must be an array");
        if (has_upper(key)) {
            ++local.uppercase_folded;
            key = to_lower(key);
        }
        std::vector<Neighbor> neighbors;
        for (const auto& n : *it) {
            if (!n.is_object()) throw ParseError(path, line, "neighbor must be an object");
            std::string word = require_string(n, "word", path, line);
            auto s = n.find("score");
            if (s == n.end() || !s->is_number()) throw ParseError(path, line, "neighbor score must be a number");
            if (has_upper(word)) {
                ++local.uppercase_folded;
                word = to_lower(word);
            }
            neighbors.push_back(Neighbor{std::move(word), s->get<double>()});
        }
        if (out.count(key)) throw ValidationError(path + ":" + std::to_string(line) + ": duplicate key " + key);
        try {
            out.emplace(key, normalize_neighbors(key, std::move(neighbors)));
        } catch (const ValidationError& e) {
            throw ValidationError(path + ":" + std::to_string(line) + ": " + e.what());
        }
    });
    if (stats) *stats = local;
    return out;
}

DistSelection dist_neighbors(const std::string& key, const NeighborList& neighbors,
                             const std::set<std::string>& wordnet_targets, std::size_t limit) {
    if (limit == 0) throw ValidationError("dist_neighbors limit must be >= 1");
    DistSelection out;
    for (const auto& n : neighbors.neighbors) {
        if (out.words.size() >= limit) break;
        if (n.word == key || wordnet_targets.count(n.word)) continue;
        out.words.push_back(n.word);
    }
    out.underfilled = out.words.size() < limit;
    return out;
}

}  // namespace ctxsub
