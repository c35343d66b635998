#include "ctxsub/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "ctxsub/backend.hpp"
#include "ctxsub/error.hpp"
#include "ctxsub/evaluation.hpp"
#include "ctxsub/io.hpp"
#include "ctxsub/kernels.hpp"
#include "ctxsub/parallel.hpp"
#include "ctxsub/probe.hpp"
#include "ctxsub/report.hpp"

namespace ctxsub {

std::vector<std::size_t> parse_layers(const std::string& spec, std::size_t num_layers, std::size_t layer_offset) {
    std::vector<std::size_t> out;
    if (spec == "all") {
        for (std::size_t i = 0; i < num_layers; ++i) out.push_back(i);
        return out;
    }
    std::size_t start = 0;
    while (start <= spec.size()) {
        const auto comma = spec.find(',', start);
        const std::string part = spec.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos) {
            throw ConfigError("invalid --layers entry '" + part + "' (expected all, N or N,M,...)");
        }
        const auto named = std::stoull(part);
        if (named < layer_offset || named - layer_offset >= num_layers) {
            throw ConfigError("layer " + part + " not available (model exposes layers " + std::to_string(layer_offset) +
                              ".." + std::to_string(layer_offset + num_layers - 1) + ")");
        }
        out.push_back(static_cast<std::size_t>(named - layer_offset));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

void require_file(const std::string& path, const char* flag) {
    if (path.empty()) throw ConfigError(std::string("missing required --") + flag);
    if (!file_exists(path)) throw ConfigError(std::string("--") + flag + " file not found: " + path);
}

void optional_file(const std::string& path, const char* flag) {
    if (!path.empty() && !file_exists(path)) throw ConfigError(std::string("--") + flag + " file not found: " + path);
}

}  // namespace

void validate_config(const RunConfig& cfg) {
    const auto& c = cfg.command;
    if (c == "probe" || c == "baseline") {
        require_file(cfg.lexicon, "lexicon");
        require_file(cfg.sentences, "sentences");
        optional_file(cfg.neighbors, "neighbors");
    } else if (c == "rerank" || c == "sweep") {
        require_file(cfg.neighbors, "neighbors");
        require_file(cfg.corpus, "corpus");
        require_file(cfg.gold, "gold");
        optional_file(cfg.frequencies, "frequencies");
        optional_file(cfg.reference, "reference");
    } else if (c == "report") {
        require_file(cfg.records, "records");
        require_file(cfg.gold, "gold");
        optional_file(cfg.frequencies, "frequencies");
        optional_file(cfg.reference, "reference");
    } else if (c == "cache") {
        require_file(cfg.cache, "cache");
        return;
    } else {
        throw ConfigError("unknown command '" + c + "'");
    }
    if (cfg.backend.rfind("cache:", 0) == 0) require_file(cfg.backend.substr(6), "backend cache");
    if (cfg.n == 0) throw ConfigError("n must be >= 1");
    if (cfg.s == 0) throw ConfigError("s must be >= 1");
    if (cfg.n_sent == 0) throw ConfigError("n-sent must be >= 1");
    if (cfg.min_len > cfg.max_len) throw ConfigError("min-len must not exceed max-len");
    if (cfg.runs == 0) throw ConfigError("runs must be >= 1");
    if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
    if (!(cfg.rrf_k > 0.0)) throw ConfigError("rrf-k must be > 0");
    if (cfg.per_sense_cap == 0) throw ConfigError("per-sense-cap must be >= 1");
    if (c == "sweep" && (cfg.sweep_n.empty() || cfg.sweep_s.empty())) throw ConfigError("sweep grid is empty");
}

namespace {

ordered_json config_echo(const RunConfig& cfg) {
    ordered_json j;
    j["command"] = cfg.command;
    j["backend"] = cfg.backend;
    j["layers"] = cfg.layers;
    j["seed"] = cfg.seed;
    if (cfg.command == "probe" || cfg.command == "baseline") {
        j["lexicon"] = cfg.lexicon;
        j["sentences"] = cfg.sentences;
        j["neighbors"] = cfg.neighbors;
        j["caps"] = {{"per_relation", cfg.caps.per_relation},
                     {"wordnet_total", cfg.caps.wordnet_total},
                     {"grand_total", cfg.caps.grand_total}};
        j["per_sense_cap"] = cfg.per_sense_cap;
        j["dist_limit"] = cfg.dist_limit;
        j["runs"] = cfg.runs;
    } else {
        j["strategy"] = std::string(to_string(cfg.strategy));
        j["fusion"] = std::string(to_string(cfg.fusion));
        j["n"] = cfg.n;
        j["s"] = cfg.s;
        j["n_sent"] = cfg.n_sent;
        j["min_len"] = cfg.min_len;
        j["max_len"] = cfg.max_len;
        j["rrf_k"] = cfg.rrf_k;
        j["neighbors"] = cfg.neighbors;
        j["corpus"] = cfg.corpus;
        j["gold"] = cfg.gold;
        j["frequencies"] = cfg.frequencies;
        j["reference"] = cfg.reference;
        j["records"] = cfg.records;
    }
    return j;
}

std::string layer_label(std::size_t payload_layer, std::size_t offset) {
    return "L" + std::to_string(payload_layer + offset);
}

struct LayerInfo {
    std::vector<std::size_t> layers;
    std::size_t offset = 0;
};

LayerInfo resolve_layers(Backend& backend, std::span<const std::string> tokens, const std::string& spec) {
    const SentenceEncoding enc = encode(backend, tokens, "__layers__");
    return LayerInfo{parse_layers(spec, enc.num_layers, enc.layer_offset), enc.layer_offset};
}

// Experiment 1 -------------------------------------------------------------

struct ProbeInputs {
    std::vector<TestSentence> sentences;
    std::map<std::pair<std::string, std::string>, TargetSet> target_sets;
    std::vector<ProbeUnit> units;
    std::map<std::string, std::size_t> warnings;
};

ProbeInputs prepare_probe(const RunConfig& cfg) {
    ProbeInputs in;
    const RelationLexicon lexicon = load_lexicon(cfg.lexicon);
    in.sentences = load_sense_tagged(cfg.sentences, cfg.per_sense_cap);
    std::map<std::string, NeighborList> neighbors;
    if (!cfg.neighbors.empty()) neighbors = load_neighbors(cfg.neighbors);

    if (lexicon.stats.uppercase_folded) in.warnings["lexicon_uppercase_folded"] = lexicon.stats.uppercase_folded;
    if (lexicon.stats.multiword_skipped) in.warnings["lexicon_multiword_skipped"] = lexicon.stats.multiword_skipped;

    std::set<std::pair<std::string, std::string>> rejected;
    for (const auto& s : in.sentences) {
        if (!s.sense) {
            ++in.warnings["sentence_without_sense"];
            continue;
        }
        const auto id = std::make_pair(s.key, *s.sense);
        if (rejected.count(id)) {
            ++in.warnings["sentence_rejected_sense"];
            continue;
        }
        if (!in.target_sets.count(id)) {
            std::optional<std::vector<std::string>> dist;
            bool has_dist_entries = false;
            for (const auto& e : lexicon.unsensed(s.key)) has_dist_entries |= e.relation == RelationType::DistNgh;
            if (!has_dist_entries) {
                if (auto it = neighbors.find(s.key); it != neighbors.end()) {
                    auto sel = dist_neighbors(s.key, it->second, lexicon.wordnet_targets(s.key), cfg.dist_limit);
                    dist = std::move(sel.words);
                }
            }
            auto result = assemble_target_set(s.key, *s.sense, lexicon, cfg.caps, dist ? &*dist : nullptr);
            if (!result.accepted()) {
                rejected.insert(id);
                ++in.warnings["sense_rejected_missing_relation"];
                ++in.warnings["sentence_rejected_sense"];
                continue;
            }
            if (result.set->dist_underfilled) ++in.warnings["sense_dist_underfilled"];
            in.target_sets.emplace(id, std::move(*result.set));
        }
    }
    for (const auto& s : in.sentences) {
        if (!s.sense) continue;
        auto it = in.target_sets.find({s.key, *s.sense});
        if (it != in.target_sets.end()) in.units.push_back(ProbeUnit{&s, &it->second});
    }
    if (in.units.empty()) throw ValidationError("no usable probe trials (check lexicon/sentence coverage)");
    return in;
}

std::vector<TargetSet> unit_target_sets(const ProbeInputs& in) {
    std::vector<TargetSet> sets;
    sets.reserve(in.units.size());
    for (const auto& u : in.units) sets.push_back(*u.target_set);
    return sets;
}

ReportTable avg_targets_table(const ProbeInputs& in) {
    ReportTable t;
    t.name = "targets";
    t.percent = false;
    t.columns = {"avg_targets"};
    for (RelationType r : kAllRelations) {
        double total = 0.0;
        for (const auto& [id, set] : in.target_sets) total += static_cast<double>(set.counts[index_of(r)]);
        ReportRow row{std::string(to_string(r)), {}};
        row.cells.push_back(ReportCell{total / static_cast<double>(in.target_sets.size()), in.target_sets.size(), {}});
        t.rows.push_back(std::move(row));
    }
    return t;
}

ordered_json optional_sense(const std::optional<std::string>& s) {
    return s ? ordered_json(*s) : ordered_json(nullptr);
}

}  // namespace

RunOutputs run_probe(const RunConfig& cfg) {
    validate_config(cfg);
    ProbeInputs in = prepare_probe(cfg);
    auto backend = make_backend(cfg.backend, cfg.cache);
    const LayerInfo li = resolve_layers(*backend, in.units.front().sentence->tokens, cfg.layers);

    const auto rankings = cfg.workers > 1 ? rank_units_parallel(in.units, li.layers, *backend, cfg.workers)
                                          : rank_units_serial(in.units, li.layers, *backend);
    const auto sets = unit_target_sets(in);
    const RelationShares random = random_baseline(sets, cfg.runs, cfg.seed);

    ReportTable p1;
    p1.name = "p_at_1";
    p1.columns.push_back("random");
    std::vector<RelationShares> per_layer;
    for (std::size_t l = 0; l < li.layers.size(); ++l) {
        p1.columns.push_back(layer_label(li.layers[l], li.offset));
        std::vector<RankedTargets> column;
        column.reserve(rankings.size());
        for (const auto& unit : rankings) column.push_back(unit[l]);
        per_layer.push_back(p_at_1_by_relation(column));
    }
    for (RelationType r : kAllRelations) {
        ReportRow row{std::string(to_string(r)), {}};
        row.cells.push_back(ReportCell{random[index_of(r)], in.units.size(), {}});
        for (const auto& shares : per_layer) row.cells.push_back(ReportCell{shares[index_of(r)], in.units.size(), {}});
        p1.rows.push_back(std::move(row));
    }

    EvalReport report;
    report.config = config_echo(cfg);
    report.tables.push_back(avg_targets_table(in));
    report.tables.push_back(std::move(p1));
    std::set<std::string> keys;
    for (const auto& [id, set] : in.target_sets) keys.insert(id.first);
    report.counts["keys"] = keys.size();
    report.counts["senses"] = in.target_sets.size();
    report.counts["sentences"] = in.units.size();
    report.counts["trials"] = in.units.size() * li.layers.size();
    for (const auto& [k, v] : in.warnings) report.counts[k] = v;

    std::string stream;
    for (std::size_t u = 0; u < rankings.size(); ++u) {
        for (const auto& r : rankings[u]) {
            ordered_json j;
            j["sentence_id"] = r.sentence_id;
            j["key"] = r.key;
            j["sense"] = optional_sense(r.sense);
            j["layer"] = r.layer + li.offset;
            j["top_target"] = r.ranking.front().word;
            j["top_relation"] = std::string(to_string(r.ranking.front().relation));
            j["top_score"] = r.ranking.front().score;
            stream += j.dump() + "\n";
        }
    }

    RunOutputs out;
    out.files["probe_report.tsv"] = render_tsv(report);
    out.files["probe_report.json"] = render_json(report);
    out.files["probe_trials.jsonl"] = std::move(stream);
    out.warnings = in.warnings;
    return out;
}

RunOutputs run_baseline(const RunConfig& cfg) {
    validate_config(cfg);
    ProbeInputs in = prepare_probe(cfg);
    const auto sets = unit_target_sets(in);
    const RelationShares random = random_baseline(sets, cfg.runs, cfg.seed);
    const RelationShares expected = random_baseline_expectation(sets);

    ReportTable t;
    t.name = "random_baseline";
    t.columns = {"random", "expected"};
    for (RelationType r : kAllRelations) {
        t.rows.push_back(ReportRow{std::string(to_string(r)),
                                   {ReportCell{random[index_of(r)], sets.size(), {}},
                                    ReportCell{expected[index_of(r)], sets.size(), {}}}});
    }
    EvalReport report;
    report.config = config_echo(cfg);
    report.tables.push_back(avg_targets_table(in));
    report.tables.push_back(std::move(t));
    report.counts["sentences"] = sets.size();
    for (const auto& [k, v] : in.warnings) report.counts[k] = v;

    RunOutputs out;
    out.files["baseline_report.tsv"] = render_tsv(report);
    out.files["baseline_report.json"] = render_json(report);
    out.warnings = in.warnings;
    return out;
}

// Experiment 2 -------------------------------------------------------------

namespace {

struct RerankRecord {
    std::string key;
    std::string method;
    std::size_t layer = 0;  // named
    std::vector<std::string> reranked;
    std::vector<std::string> initial;
};

std::string record_line(const RerankRecord& r) {
    ordered_json j;
    j["key"] = r.key;
    j["method"] = r.method;
    j["layer"] = r.layer;
    j["reranked"] = r.reranked;
    j["initial"] = r.initial;
    return j.dump() + "\n";
}

std::vector<RerankRecord> load_records(const std::string& path) {
    std::vector<RerankRecord> out;
    for_each_json_line(path, [&](const json& j, std::size_t line) {
        RerankRecord r;
        r.key = to_lower(require_string(j, "key", path, line));
        r.method = require_string(j, "method", path, line);
        auto layer = j.find("layer");
        if (layer == j.end() || !layer->is_number_integer() || layer->get<long long>() < 0) {
            throw ParseError(path, line, "field 'layer' must be a non-negative integer");
        }
        r.layer = layer->get<std::size_t>();
        for (const char* field : {"reranked", "initial"}) {
            auto it = j.find(field);
            if (it == j.end() || !it->is_array()) throw ParseError(path, line, std::string("field '") + field + "' must be an array");
            auto& dst = std::string(field) == "reranked" ? r.reranked : r.initial;
            for (const auto& w : *it) {
                if (!w.is_string()) throw ParseError(path, line, "words must be strings");
                dst.push_back(w.get<std::string>());
            }
        }
        out.push_back(std::move(r));
    });
    return out;
}

struct RerankContext {
    const std::map<std::string, NeighborList>* neighbors = nullptr;
    const std::map<std::string, std::vector<TestSentence>>* pools = nullptr;
    std::vector<std::string> keys;
};

std::map<std::string, std::vector<TestSentence>> build_pools(const RunConfig& cfg, const RawCorpus& corpus,
                                                              const std::map<std::string, NeighborList>& neighbors,
                                                              std::size_t head) {
    std::set<std::string> words;
    for (const auto& [key, list] : neighbors) {
        words.insert(key);
        if (is_early(cfg.fusion)) {
            const auto n = std::min(head, list.neighbors.size());
            for (std::size_t i = 0; i < n; ++i) words.insert(list.neighbors[i].word);
        }
    }
    const SampleConfig sc{cfg.n_sent, cfg.min_len, cfg.max_len, cfg.seed};
    std::map<std::string, std::vector<TestSentence>> pools;
    for (const auto& w : words) pools.emplace(w, sample_raw_sentences(corpus, w, sc));
    return pools;
}

RerankRecord rerank_key(const RunConfig& cfg, const RerankContext& ctx, const std::string& key, Backend& backend,
                        std::size_t layer, std::size_t offset, std::size_t n, std::size_t s) {
    const auto& list = ctx.neighbors->at(key);
    const auto initial = list.words();
    const std::size_t head_size = std::min(n, initial.size());
    const std::vector<std::string> head(initial.begin(), initial.begin() + static_cast<std::ptrdiff_t>(head_size));

    auto select = [&](const std::string& word) {
        const auto it = ctx.pools->find(word);
        if (it == ctx.pools->end() || it->second.empty()) return std::vector<TestSentence>{};
        return select_test_sentences(it->second, word, s, cfg.strategy, backend, layer, cfg.seed);
    };
    const auto key_sentences = select(key);

    RerankResult result;
    if (is_early(cfg.fusion)) {
        SentencePool neighbor_sentences;
        for (const auto& w : head) {
            if (w != key) neighbor_sentences.emplace(w, select(w));
        }
        result = rerank_early(key, head, key_sentences, neighbor_sentences, backend, layer, early_op(cfg.fusion));
    } else {
        result = rerank_late(key, head, key_sentences, backend, layer, cfg.fusion, cfg.rrf_k);
    }

    RerankRecord rec;
    rec.key = key;
    rec.method = std::string(to_string(cfg.fusion));
    rec.layer = layer + offset;
    rec.reranked = result.words();
    rec.reranked.insert(rec.reranked.end(), initial.begin() + static_cast<std::ptrdiff_t>(head_size), initial.end());
    rec.initial = initial;
    return rec;
}

// Evaluation over records ----------------------------------------------------

constexpr std::array<std::size_t, 3> kPrecisionRanks = {1, 2, 5};

struct KeyScores {
    // key -> P@k values in kPrecisionRanks order
    std::map<std::string, std::array<double, 3>> by_key;
};

KeyScores score_lists(const std::vector<std::pair<std::string, const std::vector<std::string>*>>& lists,
                      const GoldSet& gold) {
    KeyScores out;
    for (const auto& [key, words] : lists) {
        if (!gold.contains(key)) continue;
        const auto g = gold.merged(key);
        std::array<double, 3> p{};
        for (std::size_t i = 0; i < kPrecisionRanks.size(); ++i) p[i] = p_at_k(*words, g, kPrecisionRanks[i]);
        out.by_key[key] = p;
    }
    return out;
}

/// Row of mean P@1/2/5 over `keys`, with Wilcoxon p-values against `reference` when given.
ReportRow precision_row(const std::string& label, const KeyScores& scores, const std::vector<std::string>& keys,
                        const KeyScores* reference) {
    ReportRow row{label, {}};
    for (std::size_t i = 0; i < kPrecisionRanks.size(); ++i) {
        std::vector<double> x, y;
        double total = 0.0;
        std::size_t count = 0;
        for (const auto& k : keys) {
            auto it = scores.by_key.find(k);
            if (it == scores.by_key.end()) continue;
            total += it->second[i];
            ++count;
            if (reference) {
                auto rt = reference->by_key.find(k);
                if (rt != reference->by_key.end()) {
                    x.push_back(it->second[i]);
                    y.push_back(rt->second[i]);
                }
            }
        }
        ReportCell cell;
        cell.denominator = count;
        if (count) cell.value = total / static_cast<double>(count);
        if (reference && !x.empty()) cell.p_value = wilcoxon_paired(x, y);
        row.cells.push_back(cell);
    }
    return row;
}

std::vector<std::string> precision_columns() { return {"P@1", "P@2", "P@5"}; }

std::string examples_tsv(const std::vector<RerankRecord>& records, const GoldSet& gold, std::size_t limit) {
    std::string out = "key\tinitial\treranked\n";
    auto annotate = [&](const std::string& key, const std::vector<std::string>& words, std::size_t n) {
        std::string s;
        for (std::size_t i = 0; i < std::min(n, words.size()); ++i) {
            if (i) s += ", ";
            s += words[i];
            const auto rels = gold.relations_of(key, words[i]);
            if (!rels.empty()) s += "_" + std::string(to_string(rels.front()));
        }
        return s;
    };
    std::set<std::string> seen;
    for (const auto& r : records) {
        if (seen.size() >= limit) break;
        if (!seen.insert(r.key).second) continue;
        const std::size_t shown = r.initial.size();
        out += r.key + "\t" + annotate(r.key, r.initial, shown) + "\t" + annotate(r.key, r.reranked, shown) + "\n";
    }
    return out;
}

EvalReport evaluate_records(const RunConfig& cfg, const std::vector<RerankRecord>& records, const GoldSet& gold,
                            const std::map<std::string, std::uint64_t>* frequencies,
                            const std::vector<RerankRecord>* reference) {
    EvalReport report;
    report.config = config_echo(cfg);

    std::vector<std::size_t> layers;
    std::map<std::string, const RerankRecord*> initial_by_key;
    for (const auto& r : records) {
        if (std::find(layers.begin(), layers.end(), r.layer) == layers.end()) layers.push_back(r.layer);
        initial_by_key.emplace(r.key, &r);
    }
    std::sort(layers.begin(), layers.end());

    std::vector<std::string> keys;
    std::size_t missing = 0;
    for (const auto& [k, r] : initial_by_key) {
        if (gold.contains(k)) {
            keys.push_back(k);
        } else {
            ++missing;
        }
    }
    report.counts["keys"] = initial_by_key.size();
    report.counts["keys_evaluated"] = keys.size();
    report.counts["keys_missing_gold"] = missing;

    // Average gold size per relation.
    ReportTable gold_table;
    gold_table.name = "gold_relations";
    gold_table.percent = false;
    gold_table.columns = {"avg_ref_rel"};
    for (RelationType r : kWordNetRelations) {
        double total = 0.0;
        for (const auto& k : keys) total += static_cast<double>(gold.words(k, r).size());
        ReportCell cell;
        cell.denominator = keys.size();
        if (!keys.empty()) cell.value = total / static_cast<double>(keys.size());
        gold_table.rows.push_back(ReportRow{std::string(to_string(r)), {cell}});
    }
    report.tables.push_back(std::move(gold_table));

    // P@1 by relation: initial static order, then each reranked layer.
    auto as_result = [](const std::string& key, const std::vector<std::string>& words) {
        RerankResult res;
        res.key = key;
        for (const auto& w : words) res.ranked.push_back({w, 0.0});
        return res;
    };
    std::vector<RerankResult> initial_results;
    for (const auto& [k, r] : initial_by_key) initial_results.push_back(as_result(k, r->initial));
    std::vector<RelationPrecision> rel_columns{p_at_1_by_relation_type(initial_results, gold)};
    ReportTable rel;
    rel.name = "p_at_1_by_relation";
    rel.columns = {"initial"};
    for (auto layer : layers) {
        std::vector<RerankResult> results;
        for (const auto& r : records) {
            if (r.layer == layer) results.push_back(as_result(r.key, r.reranked));
        }
        rel_columns.push_back(p_at_1_by_relation_type(results, gold));
        rel.columns.push_back("L" + std::to_string(layer));
    }
    for (RelationType r : kWordNetRelations) {
        ReportRow row{std::string(to_string(r)), {}};
        for (const auto& c : rel_columns) {
            ReportCell cell;
            cell.denominator = c.evaluated;
            if (c.evaluated) cell.value = c.p_at_1[index_of(r)];
            row.cells.push_back(cell);
        }
        rel.rows.push_back(std::move(row));
    }
    report.tables.push_back(std::move(rel));

    // Overall precision with significance against the reference row.
    std::vector<std::pair<std::string, const std::vector<std::string>*>> initial_lists;
    for (const auto& [k, r] : initial_by_key) initial_lists.emplace_back(k, &r->initial);
    const KeyScores initial_scores = score_lists(initial_lists, gold);
    std::map<std::size_t, KeyScores> layer_scores;
    for (auto layer : layers) {
        std::vector<std::pair<std::string, const std::vector<std::string>*>> lists;
        for (const auto& r : records) {
            if (r.layer == layer) lists.emplace_back(r.key, &r.reranked);
        }
        layer_scores[layer] = score_lists(lists, gold);
    }

    ReportTable precision;
    precision.name = "precision";
    precision.columns = precision_columns();
    std::optional<KeyScores> reference_scores;
    if (reference && !reference->empty()) {
        const std::size_t ref_layer = std::min_element(reference->begin(), reference->end(), [](const auto& a, const auto& b) {
                                          return a.layer < b.layer;
                                      })->layer;
        std::vector<std::pair<std::string, const std::vector<std::string>*>> lists;
        for (const auto& r : *reference) {
            if (r.layer == ref_layer) lists.emplace_back(r.key, &r.reranked);
        }
        reference_scores = score_lists(lists, gold);
        precision.reference = "reference";
        precision.rows.push_back(precision_row("reference", *reference_scores, keys, nullptr));
        precision.rows.push_back(precision_row("initial", initial_scores, keys, &*reference_scores));
    } else {
        precision.reference = "initial";
        precision.rows.push_back(precision_row("initial", initial_scores, keys, nullptr));
    }
    const KeyScores& against = reference_scores ? *reference_scores : initial_scores;
    for (auto layer : layers) {
        precision.rows.push_back(precision_row("L" + std::to_string(layer), layer_scores[layer], keys, &against));
    }
    report.tables.push_back(std::move(precision));

    if (frequencies) {
        const auto [high, low] = frequency_split(keys, *frequencies);
        ReportTable freq;
        freq.name = "frequency";
        freq.columns = precision_columns();
        freq.rows.push_back(precision_row("initial_high", initial_scores, high, nullptr));
        freq.rows.push_back(precision_row("initial_low", initial_scores, low, nullptr));
        for (auto layer : layers) {
            freq.rows.push_back(precision_row("L" + std::to_string(layer) + "_high", layer_scores[layer], high, nullptr));
            freq.rows.push_back(precision_row("L" + std::to_string(layer) + "_low", layer_scores[layer], low, nullptr));
        }
        report.counts["keys_high"] = high.size();
        report.counts["keys_low"] = low.size();
        report.tables.push_back(std::move(freq));
    }
    return report;
}

struct RerankSetup {
    std::map<std::string, NeighborList> neighbors;
    GoldSet gold;
    std::optional<std::map<std::string, std::uint64_t>> frequencies;
    std::optional<std::vector<RerankRecord>> reference;
    std::map<std::string, std::vector<TestSentence>> pools;
    std::vector<std::string> keys;
    std::map<std::string, std::size_t> warnings;
};

RerankSetup prepare_rerank(const RunConfig& cfg, std::size_t max_head) {
    RerankSetup setup;
    IngestStats stats;
    setup.neighbors = load_neighbors(cfg.neighbors, &stats);
    if (stats.uppercase_folded) setup.warnings["neighbors_uppercase_folded"] = stats.uppercase_folded;
    setup.gold = load_gold(cfg.gold);
    if (!cfg.frequencies.empty()) setup.frequencies = load_frequencies(cfg.frequencies);
    if (!cfg.reference.empty()) setup.reference = load_records(cfg.reference);
    const RawCorpus corpus = RawCorpus::load(cfg.corpus);
    setup.pools = build_pools(cfg, corpus, setup.neighbors, max_head);
    for (const auto& [key, list] : setup.neighbors) {
        if (list.neighbors.empty()) {
            ++setup.warnings["key_without_neighbors"];
            continue;
        }
        if (setup.pools.at(key).empty()) {
            ++setup.warnings["key_no_context"];
            continue;
        }
        if (max_head > list.neighbors.size()) ++setup.warnings["n_clamped"];
        setup.keys.push_back(key);
    }
    if (setup.keys.empty()) throw ValidationError("no key has both neighbors and corpus context");
    return setup;
}

std::vector<RerankRecord> rerank_all(const RunConfig& cfg, const RerankSetup& setup, Backend& backend,
                                     const LayerInfo& li, std::size_t n, std::size_t s) {
    const RerankContext ctx{&setup.neighbors, &setup.pools, setup.keys};
    const std::size_t tasks = setup.keys.size() * li.layers.size();
    std::vector<RerankRecord> records(tasks);
    auto work = [&](std::size_t t) {
        const auto& key = setup.keys[t / li.layers.size()];
        const auto layer = li.layers[t % li.layers.size()];
        records[t] = rerank_key(cfg, ctx, key, backend, layer, li.offset, n, s);
    };
    if (cfg.workers > 1) {
        for_each_index_parallel(tasks, cfg.workers, work);
    } else {
        for_each_index_serial(tasks, work);
    }
    return records;
}

}  // namespace

RunOutputs run_rerank(const RunConfig& cfg) {
    validate_config(cfg);
    RerankSetup setup = prepare_rerank(cfg, cfg.n);
    auto backend = make_backend(cfg.backend, cfg.cache);
    const LayerInfo li = resolve_layers(*backend, setup.pools.at(setup.keys.front()).front().tokens, cfg.layers);
    const auto records = rerank_all(cfg, setup, *backend, li, cfg.n, cfg.s);

    EvalReport report = evaluate_records(cfg, records, setup.gold, setup.frequencies ? &*setup.frequencies : nullptr,
                                         setup.reference ? &*setup.reference : nullptr);
    for (const auto& [k, v] : setup.warnings) report.counts[k] = v;

    RunOutputs out;
    std::string stream;
    for (const auto& r : records) stream += record_line(r);
    out.files["rerank_records.jsonl"] = std::move(stream);
    out.files["rerank_report.tsv"] = render_tsv(report);
    out.files["rerank_report.json"] = render_json(report);
    if (cfg.examples) out.files["rerank_examples.tsv"] = examples_tsv(records, setup.gold, cfg.examples);
    out.warnings = setup.warnings;
    return out;
}

RunOutputs run_sweep(const RunConfig& cfg) {
    validate_config(cfg);
    std::vector<std::pair<std::size_t, std::size_t>> cells;
    for (auto n : cfg.sweep_n) {
        for (auto s : cfg.sweep_s) cells.emplace_back(n, s);
    }
    const std::pair reference_cell{cfg.reference_n, cfg.reference_s};
    if (std::find(cells.begin(), cells.end(), reference_cell) == cells.end()) cells.insert(cells.begin(), reference_cell);
    std::size_t max_n = 0;
    for (const auto& c : cells) max_n = std::max(max_n, c.first);

    RerankSetup setup = prepare_rerank(cfg, max_n);
    auto backend = make_backend(cfg.backend, cfg.cache);
    LayerInfo li = resolve_layers(*backend, setup.pools.at(setup.keys.front()).front().tokens, cfg.layers);
    li.layers.resize(1);  // the grid is measured on a single layer

    std::map<std::pair<std::size_t, std::size_t>, KeyScores> scores;
    for (const auto& cell : cells) {
        const auto records = rerank_all(cfg, setup, *backend, li, cell.first, cell.second);
        std::vector<std::pair<std::string, const std::vector<std::string>*>> lists;
        for (const auto& r : records) lists.emplace_back(r.key, &r.reranked);
        scores[cell] = score_lists(lists, setup.gold);
    }

    std::vector<std::string> keys;
    for (const auto& k : setup.keys) {
        if (setup.gold.contains(k)) keys.push_back(k);
    }
    auto label = [](std::pair<std::size_t, std::size_t> c) {
        return "n=" + std::to_string(c.first) + ",s=" + std::to_string(c.second);
    };
    ReportTable grid;
    grid.name = "sweep_" + layer_label(li.layers.front(), li.offset);
    grid.columns = precision_columns();
    grid.reference = label(reference_cell);
    grid.rows.push_back(precision_row(label(reference_cell), scores[reference_cell], keys, nullptr));
    for (const auto& cell : cells) {
        if (cell == reference_cell) continue;
        grid.rows.push_back(precision_row(label(cell), scores[cell], keys, &scores[reference_cell]));
    }

    EvalReport report;
    report.config = config_echo(cfg);
    report.config["sweep_n"] = cfg.sweep_n;
    report.config["sweep_s"] = cfg.sweep_s;
    report.tables.push_back(std::move(grid));
    report.counts["cells"] = cells.size();
    report.counts["keys"] = setup.keys.size();
    report.counts["keys_evaluated"] = keys.size();
    for (const auto& [k, v] : setup.warnings) report.counts[k] = v;

    RunOutputs out;
    out.files["sweep_report.tsv"] = render_tsv(report);
    out.files["sweep_report.json"] = render_json(report);
    out.warnings = setup.warnings;
    return out;
}

RunOutputs run_report(const RunConfig& cfg) {
    validate_config(cfg);
    const auto records = load_records(cfg.records);
    const GoldSet gold = load_gold(cfg.gold);
    std::optional<std::map<std::string, std::uint64_t>> freq;
    if (!cfg.frequencies.empty()) freq = load_frequencies(cfg.frequencies);
    std::optional<std::vector<RerankRecord>> reference;
    if (!cfg.reference.empty()) reference = load_records(cfg.reference);

    const EvalReport report =
        evaluate_records(cfg, records, gold, freq ? &*freq : nullptr, reference ? &*reference : nullptr);
    RunOutputs out;
    out.files["report.tsv"] = render_tsv(report);
    out.files["report.json"] = render_json(report);
    if (cfg.examples) out.files["examples.tsv"] = examples_tsv(records, gold, cfg.examples);
    return out;
}

RunOutputs run_cache(const RunConfig& cfg, const std::string& action) {
    validate_config(cfg);
    if (action != "inspect" && action != "verify") throw ConfigError("cache action must be inspect or verify");

    std::size_t records = 0;
    std::set<std::string> models;
    std::set<std::pair<std::size_t, std::size_t>> shapes;
    std::vector<std::string> problems;
    for_each_json_line(cfg.cache, [&](const json& j, std::size_t line) {
        ++records;
        const std::string where = cfg.cache + ":" + std::to_string(line) + ": ";
        try {
            const SentenceEncoding enc = parse_response(j);
            models.insert(enc.model);
            shapes.emplace(enc.num_layers, enc.dim);
            if (action == "verify") {
                const auto tokens = j.value("tokens", std::vector<std::string>{});
                if (tokens.empty()) {
                    problems.push_back(where + "record without tokens");
                    return;
                }
                if (j.value("key", std::string{}) != cache_key(enc.model, tokens)) {
                    problems.push_back(where + "key does not match the content hash");
                }
                validate_encoding(enc, tokens.size());
            }
        } catch (const std::exception& e) {
            problems.push_back(where + e.what());
        }
    });
    if (action == "verify" && shapes.size() > 1) problems.push_back("records disagree on num_layers/dim");

    ordered_json summary;
    summary["path"] = cfg.cache;
    summary["records"] = records;
    summary["models"] = std::vector<std::string>(models.begin(), models.end());
    summary["shapes"] = ordered_json::array();
    for (const auto& [l, d] : shapes) summary["shapes"].push_back({{"num_layers", l}, {"dim", d}});
    if (action == "verify") {
        summary["problems"] = problems;
        summary["ok"] = problems.empty();
    }
    RunOutputs out;
    out.files["-"] = summary.dump(2) + "\n";
    if (action == "verify" && !problems.empty()) {
        throw ValidationError("cache verification failed: " + problems.front() +
                              (problems.size() > 1 ? " (+" + std::to_string(problems.size() - 1) + " more)" : ""));
    }
    return out;
}

void write_outputs(const RunOutputs& outputs, const std::string& directory) {
    std::error_code ec;
    std::filesystem::create_directories(directory, ec);
    if (ec) throw ConfigError("cannot create output directory " + directory + ": " + ec.message());
    for (const auto& [name, contents] : outputs.files) {
        write_file((std::filesystem::path(directory) / name).string(), contents);
    }
}

}  // namespace ctxsub
