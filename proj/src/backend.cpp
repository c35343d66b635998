#include "ctxsub/backend.hpp"

#include <csignal>
#include <cstring>
#include <fstream>
#include <set>
#include <thread>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <httplib.h>

#include "ctxsub/error.hpp"
#include "ctxsub/prng.hpp"

namespace ctxsub {

std::vector<SentenceEncoding> Backend::encode_batch(std::span<const EncodeRequest> requests) {
    std::vector<SentenceEncoding> out;
    out.reserve(requests.size());
    for (const auto& r : requests) out.push_back(encode(r.tokens, r.id));
    return out;
}

SentenceEncoding encode(Backend& backend, std::span<const std::string> tokens, const std::string& sentence_id) {
    if (tokens.empty()) throw ValidationError("cannot encode an empty sentence '" + sentence_id + "'");
    SentenceEncoding enc = backend.encode(tokens, sentence_id);
    try {
        validate_encoding(enc, tokens.size());
    } catch (const ValidationError& e) {
        throw BackendError(std::string("malformed response: ") + e.what());
    }
    return enc;
}

// Wire protocol ------------------------------------------------------------

json make_request(const std::string& id, std::span<const std::string> tokens) {
    json j;
    j["id"] = id;
    j["tokens"] = json::array();
    for (const auto& t : tokens) j["tokens"].push_back(t);
    return j;
}

std::string serialize_request(const std::string& id, std::span<const std::string> tokens) {
    return make_request(id, tokens).dump();
}

namespace {

std::size_t require_count(const json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end() || !it->is_number_integer() || it->get<long long>() < 0) {
        throw BackendError(std::string("response field '") + field + "' must be a non-negative integer");
    }
    return it->get<std::size_t>();
}

}  // namespace

SentenceEncoding parse_response(const json& r) {
    if (!r.is_object()) throw BackendError("response is not an object");
    auto id = r.find("id");
    if (id == r.end() || !id->is_string()) throw BackendError("response without a string id");
    if (auto err = r.find("error"); err != r.end() && !err->is_null()) {
        throw BackendError("adapter error for '" + id->get<std::string>() + "': " +
                           (err->is_string() ? err->get<std::string>() : err->dump()));
    }
    SentenceEncoding enc;
    enc.sentence_id = id->get<std::string>();
    auto model = r.find("model");
    if (model == r.end() || !model->is_string()) throw BackendError("response without a model name");
    enc.model = model->get<std::string>();
    enc.num_layers = require_count(r, "num_layers");
    enc.dim = require_count(r, "dim");
    if (r.contains("layer_offset")) enc.layer_offset = require_count(r, "layer_offset");

    auto align_it = r.find("alignment");
    if (align_it == r.end() || !align_it->is_array()) throw BackendError("alignment must be an array");
    const auto& align = *align_it;
    for (const auto& tok : align) {
        if (!tok.is_array()) throw BackendError("alignment entries must be arrays");
        std::vector<std::size_t> pieces;
        for (const auto& p : tok) {
            if (!p.is_number_integer() || p.get<long long>() < 0) throw BackendError("piece index must be >= 0");
            pieces.push_back(p.get<std::size_t>());
        }
        enc.alignment.push_back(std::move(pieces));
    }

    auto vecs_it = r.find("vectors");
    if (vecs_it == r.end()) throw BackendError("response without vectors");
    const auto& vecs = *vecs_it;
    if (!vecs.is_array() || vecs.size() != enc.num_layers) throw BackendError("vectors must have num_layers entries");
    enc.num_pieces = enc.num_layers ? vecs.front().size() : 0;
    enc.vectors.reserve(enc.num_layers * enc.num_pieces * enc.dim);
    for (const auto& layer : vecs) {
        if (!layer.is_array() || layer.size() != enc.num_pieces) throw BackendError("ragged piece count across layers");
        for (const auto& piece : layer) {
            if (!piece.is_array() || piece.size() != enc.dim) throw BackendError("piece vector length differs from dim");
            for (const auto& x : piece) {
                if (!x.is_number()) throw BackendError("vector entries must be numbers");
                enc.vectors.push_back(static_cast<float>(x.get<double>()));
            }
        }
    }
    return enc;
}

ordered_json response_to_json(const SentenceEncoding& enc) {
    ordered_json j;
    j["id"] = enc.sentence_id;
    j["model"] = enc.model;
    j["num_layers"] = enc.num_layers;
    j["dim"] = enc.dim;
    if (enc.layer_offset != 0) j["layer_offset"] = enc.layer_offset;
    j["alignment"] = enc.alignment;
    ordered_json layers = ordered_json::array();
    for (std::size_t l = 0; l < enc.num_layers; ++l) {
        ordered_json pieces = ordered_json::array();
        for (std::size_t p = 0; p < enc.num_pieces; ++p) {
            ordered_json v = ordered_json::array();
            for (float x : enc.piece(l, p)) v.push_back(x);
            pieces.push_back(std::move(v));
        }
        layers.push_back(std::move(pieces));
    }
    j["vectors"] = std::move(layers);
    return j;
}

std::string cache_key(const std::string& model, std::span<const std::string> tokens) {
    return to_hex16(fnv1a64_joined(model, tokens));
}

void ShapeGuard::check(const SentenceEncoding& enc) {
    std::lock_guard lock(mu_);
    const std::pair shape{enc.num_layers, enc.dim};
    if (!shape_) {
        shape_ = shape;
    } else if (*shape_ != shape) {
        throw BackendError("dimension mismatch: response has " + std::to_string(enc.num_layers) + " layers x " +
                           std::to_string(enc.dim) + " dims, earlier responses had " + std::to_string(shape_->first) +
                           " x " + std::to_string(shape_->second));
    }
}

// Mock ---------------------------------------------------------------------

SentenceEncoding MockBackend::encode(std::span<const std::string> tokens, const std::string& sentence_id) {
    return mock::encode(tokens, sentence_id);
}

// Cache --------------------------------------------------------------------

EncodingCache::EncodingCache(std::string path) : path_(std::move(path)) {
    if (path_.empty() || !file_exists(path_)) return;
    for_each_json_line(path_, [&](const json& j, std::size_t line) {
        auto key = j.find("key");
        if (key == j.end() || !key->is_string()) throw ParseError(path_, line, "cache record without a key");
        try {
            records_.emplace(key->get<std::string>(), parse_response(j));
        } catch (const BackendError& e) {
            throw ParseError(path_, line, e.what());
        }
    });
}

std::optional<SentenceEncoding> EncodingCache::lookup(const std::string& model,
                                                      std::span<const std::string> tokens) const {
    const auto key = cache_key(model, tokens);
    std::lock_guard lock(mu_);
    auto it = records_.find(key);
    if (it == records_.end()) return std::nullopt;
    return it->second;
}

void EncodingCache::store(const SentenceEncoding& enc, std::span<const std::string> tokens) {
    const auto key = cache_key(enc.model, tokens);
    std::lock_guard lock(mu_);
    if (records_.count(key)) return;
    if (!path_.empty()) {
        ordered_json record;
        record["key"] = key;
        record["tokens"] = std::vector<std::string>(tokens.begin(), tokens.end());
        const ordered_json body = response_to_json(enc);
        for (const auto& [k, v] : body.items()) record[k] = v;
        std::ofstream out(path_, std::ios::app | std::ios::binary);
        if (!out) throw BackendError("cannot append to cache " + path_);
        out << record.dump() << '\n';
        out.flush();
        if (!out) throw BackendError("cache append failed: " + path_);
    }
    records_.emplace(key, enc);
}

std::size_t EncodingCache::size() const {
    std::lock_guard lock(mu_);
    return records_.size();
}

std::vector<std::string> EncodingCache::models() const {
    std::lock_guard lock(mu_);
    std::set<std::string> models;
    for (const auto& [k, enc] : records_) models.insert(enc.model);
    return {models.begin(), models.end()};
}

CachingBackend::CachingBackend(std::unique_ptr<Backend> inner, std::shared_ptr<EncodingCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

std::string CachingBackend::model() {
    std::call_once(model_once_, [&] { model_ = inner_->model(); });
    return model_;
}

SentenceEncoding CachingBackend::encode(std::span<const std::string> tokens, const std::string& sentence_id) {
    const auto name = model();
    if (auto hit = cache_->lookup(name, tokens)) {
        hit->sentence_id = sentence_id;
        return std::move(*hit);
    }
    SentenceEncoding enc = ctxsub::encode(*inner_, tokens, sentence_id);
    cache_->store(enc, tokens);
    return enc;
}

ReplayBackend::ReplayBackend(const std::string& path) : cache_(path) {
    if (!file_exists(path)) throw ConfigError("cache file not found: " + path);
    const auto models = cache_.models();
    if (models.size() > 1) throw ValidationError("cache " + path + " mixes several models");
    if (!models.empty()) model_ = models.front();
}

SentenceEncoding ReplayBackend::encode(std::span<const std::string> tokens, const std::string& sentence_id) {
    auto hit = cache_.lookup(model_, tokens);
    if (!hit) throw BackendError("cache miss for sentence '" + sentence_id + "' (" + cache_key(model_, tokens) + ")");
    hit->sentence_id = sentence_id;
    return std::move(*hit);
}

// Subprocess ---------------------------------------------------------------

SubprocessBackend::SubprocessBackend(std::string command) : command_(std::move(command)) {}

SubprocessBackend::~SubprocessBackend() {
    if (to_child_ >= 0) ::close(to_child_);
    if (from_child_ >= 0) ::close(from_child_);
    if (pid_ > 0) {
        int status = 0;
        ::waitpid(pid_, &status, 0);
    }
}

void SubprocessBackend::start() {
    if (pid_ > 0) return;
    std::signal(SIGPIPE, SIG_IGN);
    int in_pipe[2];
    int out_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0 || ::pipe2(out_pipe, O_CLOEXEC) != 0) {
        throw BackendError(std::string("pipe: ") + std::strerror(errno));
    }
    const pid_t pid = ::fork();
    if (pid < 0) throw BackendError(std::string("fork: ") + std::strerror(errno));
    if (pid == 0) {
        ::dup2(in_pipe[0], STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    pid_ = pid;
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
}

void SubprocessBackend::write_all(const std::string& data) {
    std::size_t done = 0;
    while (done < data.size()) {
        const auto n = ::write(to_child_, data.data() + done, data.size() - done);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw BackendError("write to adapter failed: " + std::string(std::strerror(errno)));
        }
        done += static_cast<std::size_t>(n);
    }
}

std::string SubprocessBackend::read_line() {
    for (;;) {
        if (auto nl = read_buffer_.find('\n'); nl != std::string::npos) {
            std::string line = read_buffer_.substr(0, nl);
            read_buffer_.erase(0, nl + 1);
            return line;
        }
        char buf[65536];
        const auto n = ::read(from_child_, buf, sizeof buf);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw BackendError("read from adapter failed: " + std::string(std::strerror(errno)));
        }
        if (n == 0) throw BackendError("adapter closed its output (command: " + command_ + ")");
        read_buffer_.append(buf, static_cast<std::size_t>(n));
    }
}

SentenceEncoding SubprocessBackend::await(const std::string& id) {
    json response;
    if (auto it = pending_.find(id); it != pending_.end()) {
        response = std::move(it->second);
        pending_.erase(it);
    } else {
        for (;;) {
            const std::string line = read_line();
            if (line.empty()) continue;
            json j;
            try {
                j = json::parse(line);
            } catch (const json::parse_error&) {
                throw BackendError("malformed response line from adapter");
            }
            if (!j.is_object() || !j.contains("id") || !j["id"].is_string()) {
                throw BackendError("adapter response without an id");
            }
            auto got = j["id"].get<std::string>();
            if (got == id) {
                response = std::move(j);
                break;
            }
            pending_[std::move(got)] = std::move(j);
        }
    }
    SentenceEncoding enc = parse_response(response);
    guard_.check(enc);
    if (model_.empty()) model_ = enc.model;
    return enc;
}

std::string SubprocessBackend::model() {
    {
        std::lock_guard lock(mu_);
        if (!model_.empty()) return model_;
    }
    const std::vector<std::string> probe{"probe"};
    std::string id;
    {
        std::lock_guard lock(mu_);
        id = "__probe__" + std::to_string(probe_counter_++);
    }
    encode(probe, id);
    std::lock_guard lock(mu_);
    return model_;
}

SentenceEncoding SubprocessBackend::encode(std::span<const std::string> tokens, const std::string& sentence_id) {
    std::lock_guard lock(mu_);
    start();
    write_all(serialize_request(sentence_id, tokens) + "\n");
    return await(sentence_id);
}

std::vector<SentenceEncoding> SubprocessBackend::encode_batch(std::span<const EncodeRequest> requests) {
    std::lock_guard lock(mu_);
    start();
    std::string payload;
    for (const auto& r : requests) payload += serialize_request(r.id, r.tokens) + "\n";

    std::exception_ptr write_error;
    std::thread writer([&] {
        try {
            write_all(payload);
        } catch (...) {
            write_error = std::current_exception();
        }
    });
    std::vector<SentenceEncoding> out;
    out.reserve(requests.size());
    try {
        for (const auto& r : requests) out.push_back(await(r.id));
    } catch (...) {
        // Unblock the writer before joining.
        ::kill(pid_, SIGTERM);
        writer.join();
        throw;
    }
    writer.join();
    if (write_error) std::rethrow_exception(write_error);
    return out;
}

// Remote -------------------------------------------------------------------

RemoteBackend::RemoteBackend(std::string url) {
    const std::string scheme = "http://";
    if (url.rfind(scheme, 0) != 0) throw ConfigError("remote backend needs an http:// url: " + url);
    const auto slash = url.find('/', scheme.size());
    host_ = slash == std::string::npos ? url : url.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : url.substr(slash);
}

std::string RemoteBackend::model() {
    {
        std::lock_guard lock(mu_);
        if (!model_.empty()) return model_;
    }
    const std::vector<std::string> probe{"probe"};
    encode(probe, "__probe__");
    std::lock_guard lock(mu_);
    return model_;
}

SentenceEncoding RemoteBackend::encode(std::span<const std::string> tokens, const std::string& sentence_id) {
    std::lock_guard lock(mu_);
    httplib::Client client(host_);
    client.set_connection_timeout(10);
    client.set_read_timeout(600);
    auto res = client.Post(path_, serialize_request(sentence_id, tokens), "application/json");
    if (!res) throw BackendError("request to " + host_ + path_ + " failed: " + httplib::to_string(res.error()));
    json body;
    try {
        body = json::parse(res->body);
    } catch (const json::parse_error&) {
        throw BackendError("malformed response body from " + host_ + path_);
    }
    if (res->status != 200 && !body.contains("error")) {
        throw BackendError("HTTP " + std::to_string(res->status) + " from " + host_ + path_);
    }
    SentenceEncoding enc = parse_response(body);
    if (enc.sentence_id != sentence_id) throw BackendError("response id '" + enc.sentence_id + "' does not match request");
    guard_.check(enc);
    if (model_.empty()) model_ = enc.model;
    return enc;
}

// Factory ------------------------------------------------------------------

std::unique_ptr<Backend> make_backend(const std::string& spec, const std::string& cache_path) {
    auto with_cache = [&](std::unique_ptr<Backend> inner) -> std::unique_ptr<Backend> {
        return std::make_unique<CachingBackend>(std::move(inner), std::make_shared<EncodingCache>(cache_path));
    };
    if (spec == "mock") {
        auto mock = std::make_unique<MockBackend>();
        if (cache_path.empty()) return mock;
        return with_cache(std::move(mock));
    }
    if (spec.rfind("cache:", 0) == 0) return std::make_unique<ReplayBackend>(spec.substr(6));
    if (spec.rfind("remote:", 0) == 0) return with_cache(std::make_unique<RemoteBackend>(spec.substr(7)));
    if (spec.rfind("subprocess:", 0) == 0) return with_cache(std::make_unique<SubprocessBackend>(spec.substr(11)));
    throw ConfigError("unknown backend '" + spec + "' (expected mock, cache:<path>, remote:<url>, subprocess:<command>)");
}

}  // namespace ctxsub
