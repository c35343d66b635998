#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ctxsub/corpus.hpp"
#include "ctxsub/lexicon.hpp"
#include "ctxsub/probe.hpp"

namespace ctxsub {

class Backend;

/// A probe work unit: one sentence with the target set of its (key, sense).
struct ProbeUnit {
    const TestSentence* sentence = nullptr;
    const TargetSet* target_set = nullptr;
};

/// Rankings indexed [unit][layer]. The serial kernel is the reference for the parallel one;
/// both return identical results for deterministic backends.
std::vector<std::vector<RankedTargets>> rank_units_serial(std::span<const ProbeUnit> units,
                                                          std::span<const std::size_t> layers, Backend& backend);
std::vector<std::vector<RankedTargets>> rank_units_parallel(std::span<const ProbeUnit> units,
                                                            std::span<const std::size_t> layers, Backend& backend,
                                                            int workers);

}  // namespace ctxsub
