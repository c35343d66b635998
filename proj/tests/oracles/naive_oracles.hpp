#pragma once

// Naive restatements of the fusion and signed-rank definitions, kept independent of the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace oracle {

using Ranking = std::vector<std::string>;
using Scored = std::vector<std::pair<std::string, double>>;

inline std::size_t rank1(const Ranking& r, const std::string& item) {
    return static_cast<std::size_t>(std::find(r.begin(), r.end(), item) - r.begin()) + 1;
}

inline std::vector<std::string> sorted_items(const Ranking& r) {
    std::vector<std::string> items = r;
    std::sort(items.begin(), items.end());
    return items;
}

/// Sort by score descending, then name.
inline std::vector<std::string> order_by(std::map<std::string, double> scores) {
    std::vector<std::pair<std::string, double>> v(scores.begin(), scores.end());
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
        return a.second > b.second || (a.second == b.second && a.first < b.first);
    });
    std::vector<std::string> out;
    for (auto& [k, s] : v) out.push_back(k);
    return out;
}

inline std::map<std::string, double> borda_scores(const std::vector<Ranking>& rankings) {
    std::map<std::string, double> s;
    const double m = static_cast<double>(rankings.front().size());
    for (const auto& item : rankings.front()) {
        for (const auto& r : rankings) s[item] += m - static_cast<double>(rank1(r, item));
    }
    return s;
}

inline std::vector<std::string> borda(const std::vector<Ranking>& rankings) { return order_by(borda_scores(rankings)); }

inline std::vector<std::string> condorcet(const std::vector<Ranking>& rankings) {
    const auto items = sorted_items(rankings.front());
    const auto points = borda_scores(rankings);
    std::map<std::string, int> copeland;
    for (const auto& a : items) {
        for (const auto& b : items) {
            if (a == b) continue;
            int a_over_b = 0, b_over_a = 0;
            for (const auto& r : rankings) (rank1(r, a) < rank1(r, b) ? a_over_b : b_over_a)++;
            if (a_over_b > b_over_a) copeland[a]++;
            if (a_over_b < b_over_a) copeland[a]--;
        }
    }
    std::vector<std::string> out = items;
    std::sort(out.begin(), out.end(), [&](const std::string& a, const std::string& b) {
        return std::make_tuple(-copeland[a], -points.at(a), a) < std::make_tuple(-copeland[b], -points.at(b), b);
    });
    return out;
}

inline std::vector<std::string> rrf(const std::vector<Ranking>& rankings, double k = 60.0) {
    std::map<std::string, double> s;
    for (const auto& item : rankings.front()) {
        for (const auto& r : rankings) s[item] += 1.0 / (k + static_cast<double>(rank1(r, item)));
    }
    return order_by(s);
}

inline std::vector<std::string> combsum(const std::vector<Scored>& lists) {
    std::map<std::string, double> s;
    for (const auto& [item, score] : lists.front()) s[item] = 0.0;
    for (const auto& list : lists) {
        double lo = list.front().second, hi = list.front().second;
        for (const auto& [item, score] : list) {
            lo = std::min(lo, score);
            hi = std::max(hi, score);
        }
        for (const auto& [item, score] : list) s[item] += hi == lo ? 0.0 : (score - lo) / (hi - lo);
    }
    return order_by(s);
}

/// Two-sided signed-rank p-value by enumerating all 2^n sign assignments of the ranked
/// non-zero absolute differences (average ranks for ties).
inline double wilcoxon_enumerate(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> d;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] - y[i] != 0.0) d.push_back(x[i] - y[i]);
    }
    const std::size_t n = d.size();
    if (n == 0) return 1.0;
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n; ++i) {
        double below = 0, equal = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (std::abs(d[j]) < std::abs(d[i])) below++;
            if (std::abs(d[j]) == std::abs(d[i])) equal++;
        }
        ranks[i] = below + (equal + 1) / 2.0;
    }
    double w_obs = 0;
    for (std::size_t i = 0; i < n; ++i) w_obs += d[i] > 0 ? ranks[i] : 0;
    std::uint64_t le = 0, ge = 0;
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
        double w = 0;
        for (std::size_t i = 0; i < n; ++i) w += (mask >> i & 1) ? ranks[i] : 0;
        if (w <= w_obs + 1e-9) le++;
        if (w >= w_obs - 1e-9) ge++;
    }
    const double p = 2.0 * static_cast<double>(std::min(le, ge)) / static_cast<double>(total);
    return std::min(1.0, p);
}

}  // namespace oracle
