#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <json.hpp>

#include "ctxsub/error.hpp"
#include "ctxsub/pipeline.hpp"

namespace {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfig = 2, kInput = 3, kBackend = 4 };

int report_error(const char* kind, int code, const std::string& message) {
    nlohmann::ordered_json j;
    j["error"] = kind;
    j["exit_status"] = code;
    j["message"] = message;
    std::cerr << j.dump() << std::endl;
    return code;
}

void add_common(CLI::App* cmd, ctxsub::RunConfig& cfg) {
    cmd->add_option("--backend", cfg.backend, "mock | cache:<file> | remote:<url> | subprocess:<command>");
    cmd->add_option("--layers", cfg.layers, "all, N or N,M,...");
    cmd->add_option("--seed", cfg.seed, "64-bit seed for every random stream");
    cmd->add_option("--workers", cfg.workers, "parallel workers")->check(CLI::PositiveNumber);
    cmd->add_option("--cache", cfg.cache, "encoding cache file for remote/subprocess backends");
    cmd->add_option("--output", cfg.output, "output directory")->required();
}

void add_probe_inputs(CLI::App* cmd, ctxsub::RunConfig& cfg) {
    cmd->add_option("--lexicon", cfg.lexicon, "relation lexicon (JSON lines)")->required();
    cmd->add_option("--sentences", cfg.sentences, "sense-tagged sentences (JSON lines)")->required();
    cmd->add_option("--neighbors", cfg.neighbors, "static neighbors used for dist targets");
    cmd->add_option("--per-relation-cap", cfg.caps.per_relation);
    cmd->add_option("--wordnet-cap", cfg.caps.wordnet_total);
    cmd->add_option("--total-cap", cfg.caps.grand_total);
    cmd->add_option("--per-sense-cap", cfg.per_sense_cap);
    cmd->add_option("--dist-limit", cfg.dist_limit);
    cmd->add_option("--runs", cfg.runs, "random baseline runs");
}

void add_rerank_inputs(CLI::App* cmd, ctxsub::RunConfig& cfg, std::string& strategy, std::string& fusion) {
    cmd->add_option("--neighbors", cfg.neighbors, "static neighbor lists (JSON lines)")->required();
    cmd->add_option("--corpus", cfg.corpus, "raw corpus, one tokenized sentence per line")->required();
    cmd->add_option("--gold", cfg.gold, "gold relations (JSON lines)")->required();
    cmd->add_option("--frequencies", cfg.frequencies, "word frequencies (JSON lines)");
    cmd->add_option("--reference", cfg.reference, "records of a reference run for significance tests");
    cmd->add_option("--strategy", strategy, "uniform | closest_avg | farthest_avg | random");
    cmd->add_option("--fusion", fusion, "average | max | min | borda | condorcet | rrf | combsum");
    cmd->add_option("-n,--n", cfg.n, "neighbors to rerank")->check(CLI::PositiveNumber);
    cmd->add_option("-s,--s", cfg.s, "test sentences per word")->check(CLI::PositiveNumber);
    cmd->add_option("--n-sent", cfg.n_sent, "candidate pool size");
    cmd->add_option("--min-len", cfg.min_len);
    cmd->add_option("--max-len", cfg.max_len);
    cmd->add_option("--rrf-k", cfg.rrf_k);
}

void apply_choices(ctxsub::RunConfig& cfg, const std::string& strategy, const std::string& fusion) {
    if (!strategy.empty()) {
        auto s = ctxsub::parse_strategy(strategy);
        if (!s) throw ctxsub::ConfigError("unknown strategy '" + strategy + "'");
        cfg.strategy = *s;
    }
    if (!fusion.empty()) {
        auto f = ctxsub::parse_fusion(fusion);
        if (!f) throw ctxsub::ConfigError("unknown fusion method '" + fusion + "'");
        cfg.fusion = *f;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Probe and rerank lexical relations with contextual word embeddings"};
    app.set_config("--config", "", "TOML/INI file; flags go under a [command] section");
    app.require_subcommand(1);
    app.fallthrough();

    ctxsub::RunConfig cfg;
    std::string strategy, fusion, cache_action;
    bool table2 = false;

    auto* probe = app.add_subcommand("probe", "rank relation targets by substitution similarity");
    add_common(probe, cfg);
    add_probe_inputs(probe, cfg);

    auto* baseline = app.add_subcommand("baseline", "random baseline over the probe target sets");
    add_common(baseline, cfg);
    add_probe_inputs(baseline, cfg);

    auto* rerank = app.add_subcommand("rerank", "rerank static neighbors with contextual embeddings");
    add_common(rerank, cfg);
    add_rerank_inputs(rerank, cfg, strategy, fusion);
    rerank->add_flag("--table2", table2, "use n=10, s=10");
    rerank->add_option("--examples", cfg.examples, "write a qualitative dump of the first N keys");

    auto* sweep = app.add_subcommand("sweep", "precision over an (n, s) grid");
    add_common(sweep, cfg);
    add_rerank_inputs(sweep, cfg, strategy, fusion);
    sweep->add_option("--sweep-n", cfg.sweep_n)->delimiter(',');
    sweep->add_option("--sweep-s", cfg.sweep_s)->delimiter(',');
    sweep->add_option("--reference-n", cfg.reference_n);
    sweep->add_option("--reference-s", cfg.reference_s);

    auto* report = app.add_subcommand("report", "evaluate a rerank records file");
    report->add_option("--records", cfg.records, "rerank records (JSON lines)")->required();
    report->add_option("--gold", cfg.gold)->required();
    report->add_option("--frequencies", cfg.frequencies);
    report->add_option("--reference", cfg.reference);
    report->add_option("--examples", cfg.examples);
    report->add_option("--output", cfg.output)->required();

    auto* cache = app.add_subcommand("cache", "inspect or verify an encoding cache");
    cache->add_option("action", cache_action, "inspect | verify")->required()->check(CLI::IsMember({"inspect", "verify"}));
    cache->add_option("--cache", cfg.cache)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error("config", kConfig, e.what());
    }

    try {
        apply_choices(cfg, strategy, fusion);
        if (table2) {
            cfg.n = 10;
            cfg.s = 10;
        }
        ctxsub::RunOutputs out;
        if (probe->parsed()) {
            cfg.command = "probe";
            out = ctxsub::run_probe(cfg);
        } else if (baseline->parsed()) {
            cfg.command = "baseline";
            out = ctxsub::run_baseline(cfg);
        } else if (rerank->parsed()) {
            cfg.command = "rerank";
            out = ctxsub::run_rerank(cfg);
        } else if (sweep->parsed()) {
            cfg.command = "sweep";
            out = ctxsub::run_sweep(cfg);
        } else if (report->parsed()) {
            cfg.command = "report";
            out = ctxsub::run_report(cfg);
        } else {
            cfg.command = "cache";
            out = ctxsub::run_cache(cfg, cache_action);
            std::cout << out.files.at("-");
            return kOk;
        }
        for (const auto& [name, count] : out.warnings) {
            std::cerr << "warning: " << name << " = " << count << "\n";
        }
        ctxsub::write_outputs(out, cfg.output);
        for (const auto& [name, contents] : out.files) std::cerr << "wrote " << cfg.output << "/" << name << "\n";
    } catch (const ctxsub::ConfigError& e) {
        return report_error("config", kConfig, e.what());
    } catch (const ctxsub::ParseError& e) {
        return report_error("parse", kInput, e.what());
    } catch (const ctxsub::ValidationError& e) {
        return report_error("validation", kInput, e.what());
    } catch (const ctxsub::BackendError& e) {
        return report_error("backend", kBackend, e.what());
    } catch (const std::exception& e) {
        return report_error("internal", kFailure, e.what());
    }
    return kOk;
}
