#include "ctxsub/embedding.hpp"

#include <algorithm>
#include <cmath>

#include "ctxsub/error.hpp"
#include "ctxsub/prng.hpp"
#include "ctxsub/relation.hpp"

namespace ctxsub {

void validate_encoding(const SentenceEncoding& enc, std::size_t num_tokens) {
    const std::string where = "encoding '" + enc.sentence_id + "': ";
    if (enc.num_layers == 0 || enc.dim == 0) throw ValidationError(where + "zero layers or dim");
    if (enc.alignment.size() != num_tokens) {
        throw ValidationError(where + "alignment covers " + std::to_string(enc.alignment.size()) + " tokens, expected " +
                              std::to_string(num_tokens));
    }
    if (enc.vectors.size() != enc.num_layers * enc.num_pieces * enc.dim) {
        throw ValidationError(where + "vector payload size does not match layers x pieces x dim");
    }
    std::size_t next = 0;
    for (const auto& pieces : enc.alignment) {
        if (pieces.empty()) throw ValidationError(where + "token with empty alignment");
        for (auto p : pieces) {
            if (p != next) throw ValidationError(where + "alignment is not contiguous over pieces 0..P-1");
            ++next;
        }
    }
    if (next != enc.num_pieces) throw ValidationError(where + "alignment does not cover every piece");
    for (float v : enc.vectors) {
        if (!std::isfinite(v)) throw ValidationError(where + "non-finite vector entry");
    }
}

WordVector word_repr(const SentenceEncoding& enc, std::size_t token_index, std::size_t layer) {
    if (token_index >= enc.alignment.size()) throw ValidationError("token index out of range");
    if (layer >= enc.num_layers) throw ValidationError("layer out of range");
    const auto& pieces = enc.alignment[token_index];
    if (pieces.empty()) throw ValidationError("token " + std::to_string(token_index) + " has an empty alignment");

    WordVector out;
    out.layer = layer;
    if (pieces.size() == 1) {
        auto v = enc.piece(layer, pieces.front());
        out.values.assign(v.begin(), v.end());
        return out;
    }
    std::vector<double> acc(enc.dim, 0.0);
    for (auto p : pieces) {
        auto v = enc.piece(layer, p);
        for (std::size_t d = 0; d < enc.dim; ++d) acc[d] += v[d];
    }
    out.values.resize(enc.dim);
    for (std::size_t d = 0; d < enc.dim; ++d) {
        out.values[d] = static_cast<float>(acc[d] / static_cast<double>(pieces.size()));
    }
    return out;
}

double cosine(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw ValidationError("cosine over vectors of different dims");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a[i];
        const double y = b[i];
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if (na == 0.0 || nb == 0.0) throw ValidationError("cosine with a zero-norm vector");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double cosine(const WordVector& a, const WordVector& b) {
    if (a.layer != b.layer) throw ValidationError("cosine across layers");
    return cosine(std::span<const float>(a.values), std::span<const float>(b.values));
}

namespace mock {

std::array<double, kDim> base(std::string_view token) {
    std::uint64_t h = fnv1a64(to_lower(token));
    Xorshift64Star rng(h);  // a zero hash maps to the fixed replacement seed
    std::array<double, kDim> v{};
    double norm = 0.0;
    for (auto& x : v) {
        const double u = static_cast<double>(rng.next() >> 11) * 0x1.0p-53;
        x = 2.0 * u - 1.0;
        norm += x * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    return v;
}

SentenceEncoding encode(std::span<const std::string> tokens, const std::string& sentence_id) {
    if (tokens.empty()) throw ValidationError("mock encode of an empty sentence");
    const std::size_t n = tokens.size();

    std::vector<std::array<double, kDim>> bases;
    bases.reserve(n);
    for (const auto& t : tokens) bases.push_back(base(t));

    SentenceEncoding enc;
    enc.sentence_id = sentence_id;
    enc.model = "mock";
    enc.num_layers = kLayers;
    enc.dim = kDim;
    enc.num_pieces = n;
    enc.vectors.resize(kLayers * n * kDim);
    enc.alignment.resize(n);
    for (std::size_t i = 0; i < n; ++i) enc.alignment[i] = {i};

    for (std::size_t layer = 0; layer < kLayers; ++layer) {
        const double alpha = kContextWeight[layer];
        for (std::size_t i = 0; i < n; ++i) {
            std::array<double, kDim> v = bases[i];
            if (alpha > 0.0 && n > 1) {
                // Mean of the other tokens' bases, summed in index order.
                std::array<double, kDim> others{};
                for (std::size_t j = 0; j < n; ++j) {
                    if (j == i) continue;
                    for (std::size_t d = 0; d < kDim; ++d) others[d] += bases[j][d];
                }
                double norm = 0.0;
                for (std::size_t d = 0; d < kDim; ++d) {
                    others[d] /= static_cast<double>(n - 1);
                    v[d] = (1.0 - alpha) * bases[i][d] + alpha * others[d];
                    norm += v[d] * v[d];
                }
                norm = std::sqrt(norm);
                if (norm == 0.0) throw ValidationError("mock encode produced a zero vector");
                for (auto& x : v) x /= norm;
            }
            float* dst = enc.vectors.data() + (layer * n + i) * kDim;
            for (std::size_t d = 0; d < kDim; ++d) dst[d] = static_cast<float>(v[d]);
        }
    }
    return enc;
}

}  // namespace mock

}  // namespace ctxsub
