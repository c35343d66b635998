#include "ctxsub/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "ctxsub/error.hpp"
#include "ctxsub/io.hpp"
#include "ctxsub/rerank.hpp"

namespace ctxsub {

void GoldSet::add(const std::string& key, RelationType relation, const std::string& word) {
    if (!is_wordnet(relation)) throw ValidationError("gold relations are limited to the four WordNet types");
    entries_[key][index_of(relation)].insert(word);
}

const std::set<std::string>& GoldSet::words(const std::string& key, RelationType relation) const {
    static const std::set<std::string> none;
    if (!is_wordnet(relation)) return none;
    auto it = entries_.find(key);
    return it == entries_.end() ? none : it->second[index_of(relation)];
}

std::set<std::string> GoldSet::merged(const std::string& key) const {
    std::set<std::string> out;
    auto it = entries_.find(key);
    if (it == entries_.end()) return out;
    for (const auto& s : it->second) out.insert(s.begin(), s.end());
    return out;
}

std::vector<RelationType> GoldSet::relations_of(const std::string& key, const std::string& word) const {
    std::vector<RelationType> out;
    for (RelationType r : kWordNetRelations) {
        if (words(key, r).count(word)) out.push_back(r);
    }
    return out;
}

GoldSet load_gold(const std::string& path) {
    GoldSet gold;
    for_each_json_line(path, [&](const json& j, std::size_t line) {
        const auto key = to_lower(require_string(j, "key", path, line));
        const auto rel = require_string(j, "relation", path, line);
        const auto word = to_lower(require_string(j, "word", path, line));
        auto relation = parse_relation(rel);
        if (!relation || !is_wordnet(*relation)) {
            throw ParseError(path, line, "gold relation must be one of syn, hype, hypo, cohyp");
        }
        gold.add(key, *relation, word);
    });
    return gold;
}

std::map<std::string, std::uint64_t> load_frequencies(const std::string& path) {
    std::map<std::string, std::uint64_t> out;
    for_each_json_line(path, [&](const json& j, std::size_t line) {
        const auto key = to_lower(require_string(j, "key", path, line));
        auto c = j.find("count");
        if (c == j.end() || !c->is_number_integer() || c->get<long long>() < 0) {
            throw ParseError(path, line, "field 'count' must be a non-negative integer");
        }
        out[key] = c->get<std::uint64_t>();
    });
    return out;
}

double p_at_k(std::span<const std::string> ranked, const std::set<std::string>& gold, std::size_t k) {
    if (k == 0) throw ValidationError("p_at_k needs k >= 1");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) hits += gold.count(ranked[i]) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(k);
}

RelationPrecision p_at_1_by_relation_type(std::span<const RerankResult> results, const GoldSet& gold) {
    RelationPrecision out;
    std::array<std::size_t, 4> hits{};
    for (const auto& r : results) {
        if (!gold.contains(r.key)) {
            ++out.missing_gold;
            continue;
        }
        ++out.evaluated;
        if (r.ranked.empty()) continue;
        const auto& top = r.ranked.front().item;
        for (RelationType rel : kWordNetRelations) {
            if (gold.words(r.key, rel).count(top)) ++hits[index_of(rel)];
        }
    }
    if (out.evaluated) {
        for (std::size_t i = 0; i < 4; ++i) {
            out.p_at_1[i] = static_cast<double>(hits[i]) / static_cast<double>(out.evaluated);
        }
    }
    return out;
}

std::pair<std::vector<std::string>, std::vector<std::string>> frequency_split(
    std::span<const std::string> keys, const std::map<std::string, std::uint64_t>& frequencies) {
    std::vector<std::pair<std::uint64_t, std::string>> ordered;
    for (const auto& k : keys) {
        auto it = frequencies.find(k);
        if (it == frequencies.end()) throw ValidationError("no frequency for key '" + k + "'");
        ordered.emplace_back(it->second, k);
    }
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return canonical_less(a.second, b.second);
    });
    const std::size_t high_count = (ordered.size() + 1) / 2;
    std::pair<std::vector<std::string>, std::vector<std::string>> split;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        (i < high_count ? split.first : split.second).push_back(ordered[i].second);
    }
    return split;
}

double wilcoxon_paired(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ValidationError("wilcoxon_paired needs samples of equal length");
    if (x.empty()) throw ValidationError("wilcoxon_paired needs at least one pair");

    std::vector<double> diffs;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        if (d != 0.0) diffs.push_back(d);
    }
    const std::size_t n = diffs.size();
    if (n == 0) return 1.0;

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return std::fabs(diffs[a]) < std::fabs(diffs[b]); });

    // Doubled average ranks.
    std::vector<std::size_t> rank2(n);
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && std::fabs(diffs[order[j + 1]]) == std::fabs(diffs[order[i]])) ++j;
        const std::size_t doubled = (i + 1) + (j + 1);
        for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = doubled;
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    std::size_t w2 = 0;
    for (std::size_t i = 0; i < n; ++i) w2 += diffs[i] > 0 ? rank2[i] : 0;

    if (n <= kWilcoxonExactLimit) {
        const std::size_t total2 = n * (n + 1);
        std::vector<double> counts(total2 + 1, 0.0);
        counts[0] = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t s = total2 + 1; s-- > rank2[i];) counts[s] += counts[s - rank2[i]];
        }
        double le = 0.0, ge = 0.0;
        for (std::size_t s = 0; s <= total2; ++s) {
            if (s <= w2) le += counts[s];
            if (s >= w2) ge += counts[s];
        }
        const double all = std::ldexp(1.0, static_cast<int>(n));
        return std::min(1.0, 2.0 * std::min(le, ge) / all);
    }

    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    if (var <= 0.0) return 1.0;
    const double w = static_cast<double>(w2) / 2.0;
    const double z = std::max(0.0, (std::fabs(w - mean) - 0.5) / std::sqrt(var));
    return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

}  // namespace ctxsub
