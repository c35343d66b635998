// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ctxsub/backend.hpp"
#include "ctxsub/corpus.hpp"
#include "ctxsub/embedding.hpp"
#include "ctxsub/evaluation.hpp"
#include "ctxsub/io.hpp"
#include "ctxsub/lexicon.hpp"
#include "ctxsub/pipeline.hpp"
#include "ctxsub/probe.hpp"
#include "ctxsub/rerank.hpp"
#include "oracles/naive_oracles.hpp"

using namespace ctxsub;

namespace {

const std::string kSource = CTXSUB_SOURCE_DIR;

std::string fixture(const std::string& name) { return kSource + "/data/fixtures/" + name; }

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::vector<std::string> items_of(const std::vector<ScoredItem>& v) {
    std::vector<std::string> out;
    for (const auto& s : v) out.push_back(s.item);
    return out;
}

Outcome fusion_oracle() {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937 rng(500);
    std::size_t mismatches = 0;
    for (int t = 0; t < 500; ++t) {
        const std::size_t lists = 1 + rng() % 4;
        const std::size_t m = 1 + rng() % 6;
        std::vector<std::string> items;
        for (std::size_t i = 0; i < m; ++i) items.push_back(std::string(1, static_cast<char>('a' + i)));
        std::vector<Ranking> rankings;
        std::vector<std::vector<ScoredItem>> scored;
        std::vector<oracle::Scored> naive;
        for (std::size_t l = 0; l < lists; ++l) {
            std::shuffle(items.begin(), items.end(), rng);
            rankings.push_back(items);
            std::vector<ScoredItem> list;
            oracle::Scored nl;
            for (const auto& item : items) {
                const double s = static_cast<double>(rng() % 7) / 6.0;
                list.push_back({item, s});
                nl.push_back({item, s});
            }
            scored.push_back(std::move(list));
            naive.push_back(std::move(nl));
        }
        mismatches += items_of(borda_fuse(rankings)) != oracle::borda(rankings);
        mismatches += items_of(condorcet_fuse(rankings)) != oracle::condorcet(rankings);
        mismatches += items_of(rrf_fuse(rankings)) != oracle::rrf(rankings);
        mismatches += items_of(combsum_fuse(scored)) != oracle::combsum(naive);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    char buf[128];
    std::snprintf(buf, sizeof buf, "500 instances, %zu mismatches, %.3f s", mismatches, secs);
    return {mismatches == 0 && secs < 5.0, buf};
}

Outcome random_baseline_expectation_check() {
    std::mt19937 rng(200);
    std::vector<TargetSet> sets;
    for (int t = 0; t < 200; ++t) {
        TargetSet ts;
        ts.key = "k" + std::to_string(t);
        ts.sense = "s";
        for (std::size_t r = 0; r < 5; ++r) ts.counts[r] = 1 + rng() % 10;
        while (ts.wordnet_count() > 30) {
            for (std::size_t r = 3; r-- > 1;) {
                if (ts.wordnet_count() > 30 && ts.counts[r] > 1) --ts.counts[r];
            }
        }
        for (std::size_t r = 0; r < 5; ++r) {
            for (std::size_t i = 0; i < ts.counts[r]; ++i) {
                ts.targets.push_back({"w" + std::to_string(r) + "_" + std::to_string(i), static_cast<RelationType>(r)});
            }
        }
        sets.push_back(std::move(ts));
    }
    const auto observed = random_baseline(sets, 100, 42);
    std::array<double, 5> expected{};
    for (const auto& ts : sets) {
        for (std::size_t r = 0; r < 5; ++r) {
            expected[r] += static_cast<double>(ts.counts[r]) / static_cast<double>(ts.targets.size()) / 200.0;
        }
    }
    const double draws = 200.0 * 100.0;
    bool ok = true;
    std::ostringstream detail;
    for (std::size_t r = 0; r < 5; ++r) {
        const double se = std::sqrt(expected[r] * (1 - expected[r]) / draws);
        const double z = (observed[r] - expected[r]) / se;
        ok &= std::abs(z) <= 3.0;
        detail << to_string(static_cast<RelationType>(r)) << " z=" << std::round(z * 100) / 100 << " ";
    }
    return {ok, detail.str()};
}

Outcome self_substitution() {
    const RelationLexicon lexicon = load_lexicon(fixture("probe_lexicon.jsonl"));
    const auto neighbors = load_neighbors(fixture("probe_neighbors.jsonl"));
    const auto sentences = load_sense_tagged(fixture("probe_sentences.jsonl"));
    MockBackend backend;
    const std::vector<std::size_t> layers = {0, 1, 2};
    std::size_t trials = 0, good = 0;
    double worst = 0.0;
    for (const auto& s : sentences) {
        if (!s.sense) continue;
        std::optional<std::vector<std::string>> dist;
        bool has_dist = false;
        for (const auto& e : lexicon.unsensed(s.key)) has_dist |= e.relation == RelationType::DistNgh;
        if (!has_dist) {
            if (auto it = neighbors.find(s.key); it != neighbors.end()) {
                dist = dist_neighbors(s.key, it->second, lexicon.wordnet_targets(s.key)).words;
            }
        }
        auto result = assemble_target_set(s.key, *s.sense, lexicon, {}, dist ? &*dist : nullptr);
        if (!result.accepted()) continue;
        TargetSet ts = *result.set;
        ts.targets.push_back({s.key, RelationType::Syn});
        ++ts.counts[0];
        for (const auto& ranked : rank_targets_layers(s, ts, layers, backend)) {
            ++trials;
            const auto& top = ranked.ranking.front();
            worst = std::max(worst, std::abs(top.score - 1.0));
            good += top.word == s.key && std::abs(top.score - 1.0) <= 1e-6;
        }
    }
    std::ostringstream detail;
    detail << good << "/" << trials << " trials, max |cos-1| = " << worst;
    return {trials > 0 && good == trials, detail.str()};
}

Outcome target_set_caps() {
    std::mt19937 rng(1000);
    RelationLexicon lexicon;
    for (int k = 0; k < 1000; ++k) {
        const std::string key = "key" + std::to_string(k);
        for (std::size_t r = 0; r < 5; ++r) {
            // Roughly a quarter of the keys lack some relation.
            const std::size_t n = rng() % 40 == 0 ? 0 : rng() % 25;
            for (std::size_t i = 0; i < n; ++i) {
                LexiconEntry e;
                e.key = key;
                e.relation = static_cast<RelationType>(r);
                e.target = "t" + std::to_string(r) + "x" + std::to_string(i) + "k" + std::to_string(k);
                if (e.relation != RelationType::DistNgh) e.sense = "s1";
                lexicon.add(std::move(e));
            }
        }
    }
    std::size_t accepted = 0, rejected = 0, violations = 0;
    for (const auto& [key, senses] : lexicon.keys()) {
        const auto& entries = lexicon.entries(key, "s1");
        std::array<std::size_t, 5> available{};
        for (const auto& e : entries) ++available[static_cast<std::size_t>(e.relation)];
        for (const auto& e : lexicon.unsensed(key)) ++available[static_cast<std::size_t>(e.relation)];
        const bool complete = std::all_of(available.begin(), available.end(), [](auto n) { return n > 0; });
        const auto result = assemble_target_set(key, "s1", lexicon);
        if (!result.accepted()) {
            ++rejected;
            violations += complete;
            continue;
        }
        ++accepted;
        const auto& ts = *result.set;
        std::array<std::size_t, 5> counted{};
        std::set<std::string> words;
        for (const auto& t : ts.targets) {
            ++counted[static_cast<std::size_t>(t.relation)];
            words.insert(t.word);
        }
        bool ok = !!complete && counted == ts.counts && words.size() == ts.targets.size();
        for (auto c : counted) ok &= c >= 1 && c <= 10;
        ok &= ts.wordnet_count() <= 30 && ts.targets.size() <= 40;
        violations += !ok;
    }
    std::ostringstream detail;
    detail << accepted << " accepted, " << rejected << " rejected, " << violations << " violations";
    return {violations == 0 && accepted + rejected == 1000, detail.str()};
}

Outcome wilcoxon_exactness() {
    std::mt19937 rng(12);
    double worst = 0.0;
    std::size_t cases = 0;
    for (std::size_t n = 1; n <= 12; ++n) {
        for (int rep = 0; rep < 20; ++rep) {
            std::vector<double> x(n), y(n);
            for (std::size_t i = 0; i < n; ++i) {
                // Coarse grid produces ties and zero differences.
                x[i] = static_cast<double>(rng() % 6) / 5.0;
                y[i] = static_cast<double>(rng() % 6) / 5.0;
            }
            worst = std::max(worst, std::abs(wilcoxon_paired(x, y) - oracle::wilcoxon_enumerate(x, y)));
            ++cases;
        }
    }
    const std::vector<double> a = {1, 2, 3, 4, 5, 6}, b = {0, 0, 0, 0, 0, 0};
    const double p6 = wilcoxon_paired(a, b);
    std::ostringstream detail;
    detail << cases << " cases, max deviation " << worst << ", n=6 all-positive p=" << p6;
    return {worst <= 1e-9 && p6 == 0.03125, detail.str()};
}

Outcome uniform_selection() {
    const std::vector<std::string> ids = {"c0", "c1", "c2", "c3", "c4"};
    const std::vector<double> sims = {0.1, 0.3, 0.5, 0.7, 0.9};
    auto picked = select_by_similarity(ids, sims, 3, SelectionStrategy::Uniform, 42, "acceptance");
    std::sort(picked.begin(), picked.end());
    std::ostringstream detail;
    for (auto p : picked) detail << p << " ";
    return {picked == std::vector<std::size_t>{0, 2, 4}, "positions " + detail.str()};
}

Outcome end_to_end_determinism() {
    RunConfig probe;
    probe.command = "probe";
    probe.lexicon = fixture("probe_lexicon.jsonl");
    probe.sentences = fixture("probe_sentences.jsonl");
    probe.neighbors = fixture("probe_neighbors.jsonl");
    probe.seed = 42;
    RunConfig rerank;
    rerank.command = "rerank";
    rerank.neighbors = fixture("rerank_neighbors.jsonl");
    rerank.corpus = fixture("rerank_corpus.txt");
    rerank.gold = fixture("rerank_gold.jsonl");
    rerank.frequencies = fixture("rerank_frequencies.jsonl");
    rerank.seed = 42;

    bool ok = true;
    std::size_t files = 0;
    for (auto [cfg, fn] : {std::pair{probe, &run_probe}, std::pair{rerank, &run_rerank}}) {
        const auto first = fn(cfg);
        const auto second = fn(cfg);
        auto parallel = cfg;
        parallel.workers = 4;
        const auto third = fn(parallel);
        ok &= !first.files.empty() && first.files == second.files && first.files == third.files;
        files += first.files.size();
    }
    return {ok, std::to_string(files) + " report files compared across 2 runs and 1 vs 4 workers"};
}

Outcome mock_golden_vectors() {
    std::ifstream in(kSource + "/tests/golden/mock_vectors.json");
    const auto golden = json::parse(in);
    std::size_t compared = 0, mismatched = 0;
    for (const char* token : {"disaster", "year"}) {
        const auto actual = mock::base(token);
        const auto& expect = golden.at("base").at(token);
        for (std::size_t d = 0; d < mock::kDim; ++d) {
            const auto bits = std::stoull(expect.at(d).get<std::string>(), nullptr, 16);
            mismatched += std::bit_cast<std::uint64_t>(actual[d]) != bits;
            ++compared;
        }
    }
    return {compared > 0 && mismatched == 0,
            std::to_string(compared) + " components, " + std::to_string(mismatched) + " mismatched"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"fusion_oracle_equivalence", fusion_oracle},
        {"random_baseline_expectation", random_baseline_expectation_check},
        {"self_substitution_supremacy", self_substitution},
        {"target_set_caps", target_set_caps},
        {"wilcoxon_exactness", wilcoxon_exactness},
        {"uniform_selection_formula", uniform_selection},
        {"end_to_end_determinism", end_to_end_determinism},
        {"mock_golden_vectors", mock_golden_vectors},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %s (%s)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
