#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ctxsub/embedding.hpp"
#include "ctxsub/io.hpp"

namespace ctxsub {

struct EncodeRequest {
    std::string id;
    std::vector<std::string> tokens;
};

/// Produces per-layer token embeddings. Implementations must be deterministic and safe to call
/// from several threads; `concurrent()` tells whether calls actually run in parallel.
class Backend {
public:
    virtual ~Backend() = default;

    virtual std::string model() = 0;
    virtual SentenceEncoding encode(std::span<const std::string> tokens, const std::string& sentence_id) = 0;
    /// Default implementation encodes one request at a time.
    virtual std::vector<SentenceEncoding> encode_batch(std::span<const EncodeRequest> requests);
    virtual bool concurrent() const = 0;
};

/// Checked encode: validates the invariants against the token count.
SentenceEncoding encode(Backend& backend, std::span<const std::string> tokens, const std::string& sentence_id);

// Wire protocol ------------------------------------------------------------

json make_request(const std::string& id, std::span<const std::string> tokens);
std::string serialize_request(const std::string& id, std::span<const std::string> tokens);
/// Parses a response object. An `error` field turns into BackendError.
SentenceEncoding parse_response(const json& response);
ordered_json response_to_json(const SentenceEncoding& enc);

/// Content hash of (model, tokens): FNV-1a-64 over fields joined by 0x1F, 16 lowercase hex digits.
std::string cache_key(const std::string& model, std::span<const std::string> tokens);

/// Rejects responses whose shape differs from the first one seen.
class ShapeGuard {
public:
    void check(const SentenceEncoding& enc);

private:
    std::mutex mu_;
    std::optional<std::pair<std::size_t, std::size_t>> shape_;
};

// Backends -----------------------------------------------------------------

class MockBackend final : public Backend {
public:
    std::string model() override { return "mock"; }
    SentenceEncoding encode(std::span<const std::string> tokens, const std::string& sentence_id) override;
    bool concurrent() const override { return true; }
};

/// Line-delimited store of responses keyed by cache_key. Concurrent reads, serialized appends.
/// With an empty path the cache is memory-only.
class EncodingCache {
public:
    explicit EncodingCache(std::string path = {});

    std::optional<SentenceEncoding> lookup(const std::string& model, std::span<const std::string> tokens) const;
    void store(const SentenceEncoding& enc, std::span<const std::string> tokens);

    std::size_t size() const;
    /// Models seen in the records, sorted.
    std::vector<std::string> models() const;
    const std::string& path() const { return path_; }

private:
    std::string path_;
    mutable std::mutex mu_;
    std::unordered_map<std::string, SentenceEncoding> records_;
};

/// Wraps another backend; answers from the cache and records every miss.
class CachingBackend final : public Backend {
public:
    CachingBackend(std::unique_ptr<Backend> inner, std::shared_ptr<EncodingCache> cache);

    std::string model() override;
    SentenceEncoding encode(std::span<const std::string> tokens, const std::string& sentence_id) override;
    bool concurrent() const override { return inner_->concurrent(); }

private:
    std::unique_ptr<Backend> inner_;
    std::shared_ptr<EncodingCache> cache_;
    std::once_flag model_once_;
    std::string model_;
};

/// Replays a cache file. A miss is a BackendError.
class ReplayBackend final : public Backend {
public:
    explicit ReplayBackend(const std::string& path);

    std::string model() override { return model_; }
    SentenceEncoding encode(std::span<const std::string> tokens, const std::string& sentence_id) override;
    bool concurrent() const override { return true; }

private:
    EncodingCache cache_;
    std::string model_;
};

/// Speaks the wire protocol with a child process over its stdin/stdout.
class SubprocessBackend final : public Backend {
public:
    explicit SubprocessBackend(std::string command);
    ~SubprocessBackend() override;
    SubprocessBackend(const SubprocessBackend&) = delete;
    SubprocessBackend& operator=(const SubprocessBackend&) = delete;

    std::string model() override;
    SentenceEncoding encode(std::span<const std::string> tokens, const std::string& sentence_id) override;
    /// Writes every request before reading; responses are matched by id in any order.
    std::vector<SentenceEncoding> encode_batch(std::span<const EncodeRequest> requests) override;
    bool concurrent() const override { return false; }

private:
    void start();
    void write_all(const std::string& data);
    std::string read_line();
    SentenceEncoding await(const std::string& id);

    std::string command_;
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string read_buffer_;
    std::map<std::string, json> pending_;
    std::mutex mu_;
    std::string model_;
    ShapeGuard guard_;
    std::uint64_t probe_counter_ = 0;
};

/// POSTs one request object per call to an HTTP endpoint.
class RemoteBackend final : public Backend {
public:
    explicit RemoteBackend(std::string url);

    std::string model() override;
    SentenceEncoding encode(std::span<const std::string> tokens, const std::string& sentence_id) override;
    bool concurrent() const override { return false; }

private:
    std::string host_;
    std::string path_;
    std::mutex mu_;
    std::string model_;
    ShapeGuard guard_;
};

/// Builds a backend from `mock`, `cache:<path>`, `remote:<url>` or `subprocess:<command>`.
/// Remote and subprocess backends are always wrapped in a cache (file-backed when `cache_path`
/// is set, memory-only otherwise), so repeated token sequences are encoded once.
std::unique_ptr<Backend> make_backend(const std::string& spec, const std::string& cache_path = {});

}  // namespace ctxsub
