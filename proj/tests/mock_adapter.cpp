// Stdio adapter speaking the wire protocol with mock vectors. Used by the subprocess tests.
//   --reverse         hold requests until input goes idle, then answer them in reverse order
//   --split           split tokens of 6+ characters into 2 pieces and 9+ into 3
//   --fail-on TOKEN   answer requests containing TOKEN with an error record
//   --shape-change    answer every request after the first with 8-dim vectors
//   --garbage         answer the first request with a line that is not JSON
//   --offset N        report layer_offset N
//   --model NAME      model name (default "mock-adapter")

#include <poll.h>
#include <unistd.h>

#include <cstring>
#include <iostream>
#include <string>
#include <vector>

#include "ctxsub/backend.hpp"
#include "ctxsub/embedding.hpp"

namespace {

struct Options {
    bool reverse = false;
    bool split = false;
    bool shape_change = false;
    bool garbage = false;
    std::string fail_on;
    std::size_t offset = 0;
    std::string model = "mock-adapter";
};

std::vector<std::string> pieces_of(const std::string& token, bool split) {
    if (!split || token.size() < 6) return {token};
    const std::size_t parts = token.size() >= 9 ? 3 : 2;
    std::vector<std::string> out;
    const std::size_t step = token.size() / parts;
    for (std::size_t i = 0; i < parts; ++i) {
        const std::size_t begin = i * step;
        const std::size_t len = i + 1 == parts ? std::string::npos : step;
        out.push_back((i ? "##" : "") + token.substr(begin, len));
    }
    return out;
}

std::string respond(const ctxsub::json& request, const Options& opt, std::size_t served) {
    const std::string id = request.at("id").get<std::string>();
    const auto tokens = request.at("tokens").get<std::vector<std::string>>();
    ctxsub::ordered_json err;
    for (const auto& t : tokens) {
        if (!opt.fail_on.empty() && t == opt.fail_on) {
            err["id"] = id;
            err["error"] = "refusing token " + t;
            return err.dump();
        }
    }
    if (opt.garbage && served == 0) return "this is not json";

    std::vector<std::string> pieces;
    std::vector<std::vector<std::size_t>> alignment;
    for (const auto& t : tokens) {
        std::vector<std::size_t> idx;
        for (auto& p : pieces_of(t, opt.split)) {
            idx.push_back(pieces.size());
            pieces.push_back(p);
        }
        alignment.push_back(idx);
    }
    ctxsub::SentenceEncoding enc = ctxsub::mock::encode(pieces, id);
    enc.alignment = alignment;
    enc.model = opt.model;
    enc.layer_offset = opt.offset;
    if (opt.shape_change && served > 0) {
        std::vector<float> narrow;
        for (std::size_t l = 0; l < enc.num_layers; ++l) {
            for (std::size_t p = 0; p < enc.num_pieces; ++p) {
                auto v = enc.piece(l, p);
                narrow.insert(narrow.end(), v.begin(), v.begin() + 8);
            }
        }
        enc.vectors = narrow;
        enc.dim = 8;
    }
    return ctxsub::response_to_json(enc).dump();
}

bool input_ready(int timeout_ms) {
    pollfd p{STDIN_FILENO, POLLIN, 0};
    return ::poll(&p, 1, timeout_ms) > 0;
}

}  // namespace

int main(int argc, char** argv) {
    Options opt;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--reverse") opt.reverse = true;
        else if (a == "--split") opt.split = true;
        else if (a == "--shape-change") opt.shape_change = true;
        else if (a == "--garbage") opt.garbage = true;
        else if (a == "--fail-on" && i + 1 < argc) opt.fail_on = argv[++i];
        else if (a == "--offset" && i + 1 < argc) opt.offset = std::stoul(argv[++i]);
        else if (a == "--model" && i + 1 < argc) opt.model = argv[++i];
        else {
            std::cerr << "unknown option " << a << "\n";
            return 2;
        }
    }

    std::size_t served = 0;
    std::vector<ctxsub::json> held;
    std::string buffer;
    auto flush_held = [&] {
        for (auto it = held.rbegin(); it != held.rend(); ++it) std::cout << respond(*it, opt, served++) << "\n";
        held.clear();
        std::cout.flush();
    };
    char chunk[65536];
    for (;;) {
        if (opt.reverse && !held.empty() && !input_ready(30)) flush_held();
        const auto n = ::read(STDIN_FILENO, chunk, sizeof chunk);
        if (n <= 0) break;
        buffer.append(chunk, static_cast<std::size_t>(n));
        std::size_t nl;
        while ((nl = buffer.find('\n')) != std::string::npos) {
            const std::string line = buffer.substr(0, nl);
            buffer.erase(0, nl + 1);
            if (line.empty()) continue;
            auto request = ctxsub::json::parse(line);
            if (opt.reverse) {
                held.push_back(std::move(request));
            } else {
                std::cout << respond(request, opt, served++) << "\n";
                std::cout.flush();
            }
        }
    }
    flush_held();
    return 0;
}
