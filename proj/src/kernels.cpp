#include "ctxsub/kernels.hpp"

#include "ctxsub/backend.hpp"
#include "ctxsub/parallel.hpp"

namespace ctxsub {

std::vector<std::vector<RankedTargets>> rank_units_serial(std::span<const ProbeUnit> units,
                                                          std::span<const std::size_t> layers, Backend& backend) {
    std::vector<std::vector<RankedTargets>> out(units.size());
    for_each_index_serial(units.size(), [&](std::size_t i) {
        out[i] = rank_targets_layers(*units[i].sentence, *units[i].target_set, layers, backend);
    });
    return out;
}

std::vector<std::vector<RankedTargets>> rank_units_parallel(std::span<const ProbeUnit> units,
                                                            std::span<const std::size_t> layers, Backend& backend,
                                                            int workers) {
    std::vector<std::vector<RankedTargets>> out(units.size());
    for_each_index_parallel(units.size(), workers, [&](std::size_t i) {
        out[i] = rank_targets_layers(*units[i].sentence, *units[i].target_set, layers, backend);
    });
    return out;
}

}  // namespace ctxsub
