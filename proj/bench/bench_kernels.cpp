#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "ctxsub/backend.hpp"
#include "ctxsub/kernels.hpp"

namespace {

struct Workload {
    std::vector<ctxsub::TestSentence> sentences;
    std::vector<ctxsub::TargetSet> sets;
    std::vector<ctxsub::ProbeUnit> units;
    std::vector<std::size_t> layers{0, 1, 2};
};

const Workload& workload() {
    static const Workload w = [] {
        Workload w;
        constexpr std::size_t kUnits = 64;
        constexpr std::size_t kLen = 24;
        w.sentences.reserve(kUnits);
        w.sets.reserve(kUnits);
        for (std::size_t u = 0; u < kUnits; ++u) {
            ctxsub::TestSentence s;
            s.id = "s" + std::to_string(u);
            s.key = "key" + std::to_string(u);
            s.sense = "key" + std::to_string(u) + ".n.01";
            for (std::size_t t = 0; t < kLen; ++t) s.tokens.push_back("w" + std::to_string((u * 7 + t * 13) % 500));
            s.key_index = kLen / 2;
            s.tokens[s.key_index] = s.key;
            w.sentences.push_back(s);

            ctxsub::TargetSet set;
            set.key = s.key;
            set.sense = *s.sense;
            for (std::size_t i = 0; i < 40; ++i) {
                const auto rel = ctxsub::kAllRelations[i % 5];
                set.targets.push_back({"t" + std::to_string(u) + "_" + std::to_string(i), rel});
                ++set.counts[ctxsub::index_of(rel)];
            }
            w.sets.push_back(set);
        }
        for (std::size_t u = 0; u < kUnits; ++u) w.units.push_back({&w.sentences[u], &w.sets[u]});
        return w;
    }();
    return w;
}

void BM_RankUnitsSerial(benchmark::State& state) {
    const auto& w = workload();
    ctxsub::MockBackend backend;
    for (auto _ : state) {
        auto out = ctxsub::rank_units_serial(w.units, w.layers, backend);
        benchmark::DoNotOptimize(out);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(w.units.size()));
}
BENCHMARK(BM_RankUnitsSerial)->Unit(benchmark::kMillisecond);

void BM_RankUnitsParallel(benchmark::State& state) {
    const auto& w = workload();
    ctxsub::MockBackend backend;
    const int workers = static_cast<int>(state.range(0));
    for (auto _ : state) {
        auto out = ctxsub::rank_units_parallel(w.units, w.layers, backend, workers);
        benchmark::DoNotOptimize(out);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(w.units.size()));
}
BENCHMARK(BM_RankUnitsParallel)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
