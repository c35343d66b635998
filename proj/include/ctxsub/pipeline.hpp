#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ctxsub/corpus.hpp"
#include "ctxsub/lexicon.hpp"
#include "ctxsub/rerank.hpp"

namespace ctxsub {

struct RunConfig {
    std::string command;
    std::string backend = "mock";
    std::string layers = "all";
    SelectionStrategy strategy = SelectionStrategy::Uniform;
    FusionMethod fusion = FusionMethod::EarlyAvg;
    std::size_t n = 15;
    std::size_t s = 10;
    std::size_t n_sent = 100;
    std::size_t min_len = 10;
    std::size_t max_len = 90;
    CapConfig caps;
    std::size_t per_sense_cap = 20;
    std::size_t dist_limit = 10;
    std::size_t runs = 100;
    double rrf_k = kDefaultRrfK;
    std::uint64_t seed = 0;
    int workers = 1;
    std::size_t examples = 0;
    std::vector<std::size_t> sweep_n = {5, 10, 15};
    std::vector<std::size_t> sweep_s = {5, 10, 15};
    std::size_t reference_n = 10;
    std::size_t reference_s = 10;

    std::string lexicon;
    std::string sentences;
    std::string corpus;
    std::string neighbors;
    std::string gold;
    std::string frequencies;
    std::string cache;
    std::string output;
    std::string records;
    std::string reference;
};

/// File name -> contents. Runs build every output in memory; nothing is written on failure.
struct RunOutputs {
    std::map<std::string, std::string> files;
    std::map<std::string, std::size_t> warnings;
};

/// Parses "all", "3" or "1,5,8" against the available named layers [offset, offset + count).
/// Returns payload indices.
std::vector<std::size_t> parse_layers(const std::string& spec, std::size_t num_layers, std::size_t layer_offset);

/// Throws ConfigError when a path the command needs is missing or unreadable, or a count is invalid.
void validate_config(const RunConfig& cfg);

RunOutputs run_probe(const RunConfig& cfg);
RunOutputs run_baseline(const RunConfig& cfg);
RunOutputs run_rerank(const RunConfig& cfg);
RunOutputs run_sweep(const RunConfig& cfg);
/// Re-evaluates a rerank records file against gold (and optionally frequencies, a reference
/// records file and a qualitative example dump).
RunOutputs run_report(const RunConfig& cfg);
RunOutputs run_cache(const RunConfig& cfg, const std::string& action);

/// Writes every output under cfg.output (created if needed).
void write_outputs(const RunOutputs& outputs, const std::string& directory);

}  // namespace ctxsub
