#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace ctxsub {

class Backend;

struct TestSentence {
    std::string id;
    std::vector<std::string> tokens;
    std::size_t key_index = 0;
    std::string key;
    std::optional<std::string> sense;
};

enum class SelectionStrategy { Random, ClosestAvg, FarthestAvg, Uniform };

std::string_view to_string(SelectionStrategy s);
std::optional<SelectionStrategy> parse_strategy(std::string_view s);

/// Loads sense-tagged sentences, keeping at most `per_sense_cap` per (key, sense) in file order.
std::vector<TestSentence> load_sense_tagged(const std::string& path, std::size_t per_sense_cap = 20);

/// Pre-tokenized raw corpus held in memory with a token -> line index.
class RawCorpus {
public:
    explicit RawCorpus(std::vector<std::vector<std::string>> sentences);
    static RawCorpus load(const std::string& path);

    std::size_t size() const { return sentences_.size(); }
    const std::vector<std::string>& sentence(std::size_t i) const { return sentences_[i]; }
    /// Line indices (0-based, ascending) of sentences containing `word` (case-folded).
    const std::vector<std::size_t>& occurrences(const std::string& word) const;

private:
    std::vector<std::vector<std::string>> sentences_;
    std::unordered_map<std::string, std::vector<std::size_t>> index_;
};

struct SampleConfig {
    std::size_t n_sent = 100;
    std::size_t min_len = 10;
    std::size_t max_len = 90;
    std::uint64_t seed = 0;
};

/// Uniform sample without replacement of eligible sentences for `key`, returned in corpus order.
/// An empty result means the key has no context.
std::vector<TestSentence> sample_raw_sentences(const RawCorpus& corpus, const std::string& key,
                                               const SampleConfig& cfg);

std::vector<TestSentence> sample_raw_sentences(const std::string& corpus_path, const std::string& key,
                                               const SampleConfig& cfg);

/// Picks `n_c` of the candidates given their similarity to the centroid. `ids` is used for
/// tie-breaking and for the canonical output order. Returns indices into the inputs, sorted by id.
std::vector<std::size_t> select_by_similarity(std::span<const std::string> ids,
                                              std::span<const double> similarity, std::size_t n_c,
                                              SelectionStrategy strategy, std::uint64_t seed,
                                              const std::string& stream_label);

/// Encodes every candidate at `layer`, compares each key vector to the candidates' centroid and
/// selects `n_c` of them under `strategy`. Output is ordered by sentence id.
std::vector<TestSentence> select_test_sentences(std::span<const TestSentence> candidates,
                                                const std::string& key, std::size_t n_c,
                                                SelectionStrategy strategy, Backend& backend,
                                                std::size_t layer, std::uint64_t seed);

}  // namespace ctxsub
