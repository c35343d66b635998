#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ctxsub {

/// Per-layer, per-piece vectors of one encoded sentence.
/// Vectors are stored layer-major: [layer][piece][dim].
struct SentenceEncoding {
    std::string sentence_id;
    std::string model;
    std::size_t num_layers = 0;
    std::size_t dim = 0;
    std::size_t num_pieces = 0;
    /// Named index of payload layer 0 (e.g. 1 for adapters that drop an input layer).
    std::size_t layer_offset = 0;
    std::vector<float> vectors;
    /// For each input token, the ordered piece indices it spans.
    std::vector<std::vector<std::size_t>> alignment;

    std::span<const float> piece(std::size_t layer, std::size_t piece_index) const {
        return {vectors.data() + (layer * num_pieces + piece_index) * dim, dim};
    }
};

/// Throws ValidationError unless the encoding is internally consistent and covers `num_tokens`
/// tokens with a contiguous alignment over pieces 0..P-1.
void validate_encoding(const SentenceEncoding& enc, std::size_t num_tokens);

struct WordVector {
    std::vector<float> values;
    std::size_t layer = 0;
};

/// Representation of one token at one layer: its piece, or the mean of its pieces.
WordVector word_repr(const SentenceEncoding& enc, std::size_t token_index, std::size_t layer);

/// Cosine similarity with 64-bit accumulation, clamped to [-1, 1].
/// Throws ValidationError on a zero-norm operand or mismatched dims/layers.
double cosine(const WordVector& a, const WordVector& b);
double cosine(std::span<const float> a, std::span<const float> b);

/// Deterministic test double: 16 dims, 3 layers, one piece per token.
namespace mock {

inline constexpr std::size_t kDim = 16;
inline constexpr std::size_t kLayers = 3;
inline constexpr std::array<double, kLayers> kContextWeight = {0.0, 0.25, 0.5};

/// Unit-length base vector of a token (double precision, before the final float cast).
std::array<double, kDim> base(std::string_view token);

SentenceEncoding encode(std::span<const std::string> tokens, const std::string& sentence_id);

}  // namespace mock

}  // namespace ctxsub
