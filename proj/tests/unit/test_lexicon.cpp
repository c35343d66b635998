#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "ctxsub/error.hpp"
#include "ctxsub/lexicon.hpp"
#include "ctxsub/prng.hpp"
#include "support.hpp"

using namespace ctxsub;
using testsupport::TempDir;

namespace {

std::string entry(const std::string& key, const std::string& sense, const std::string& rel, const std::string& target) {
    const std::string s = sense.empty() ? "null" : "\"" + sense + "\"";
    return R"({"key":")" + key + R"(","sense":)" + s + R"(,"relation":")" + rel + R"(","target":")" + target + "\"}";
}

RelationLexicon lexicon_with(const std::array<int, 5>& counts, const std::string& key = "k",
                             const std::string& sense = "k#1") {
    RelationLexicon lex;
    for (RelationType r : kAllRelations) {
        for (int i = 0; i < counts[index_of(r)]; ++i) {
            LexiconEntry e{key, std::nullopt, r, std::string(to_string(r)) + std::to_string(i)};
            if (is_wordnet(r)) e.sense = sense;
            lex.add(e);
        }
    }
    return lex;
}

// Independent statement of the cap rule on per-relation counts with distinct targets.
std::array<std::size_t, 5> expected_counts(std::array<std::size_t, 5> c, const CapConfig& caps) {
    for (auto& x : c) x = std::min(x, caps.per_relation);
    auto wn = [&] { return c[0] + c[1] + c[2] + c[3]; };
    for (std::size_t r : {2u, 3u}) {
        if (wn() > caps.wordnet_total) {
            const std::size_t excess = wn() - caps.wordnet_total;
            c[r] -= std::min(excess, c[r] - 1);
        }
    }
    const std::size_t room = caps.grand_total > wn() ? caps.grand_total - wn() : 0;
    c[4] = std::min(c[4], room);
    return c;
}

}  // namespace

TEST_CASE("relation names round-trip") {
    for (RelationType r : kAllRelations) CHECK(parse_relation(to_string(r)) == r);
    CHECK_FALSE(parse_relation("antonym").has_value());
    CHECK(to_string(RelationType::DistNgh) == "dist");
    CHECK(to_lower("DisAster") == "disaster");
}

TEST_CASE("fnv1a64 reference values") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
    CHECK(to_hex16(0xabcull) == "0000000000000abc");
}

TEST_CASE("xorshift64* streams") {
    Xorshift64Star zero(0), replaced(kZeroSeedReplacement);
    for (int i = 0; i < 8; ++i) CHECK(zero.next() == replaced.next());

    auto a = derive_stream(42, "label"), b = derive_stream(42, "label");
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());

    auto c = derive_stream(42, "label"), d = derive_stream(42, "other");
    bool differs = false;
    for (int i = 0; i < 4; ++i) differs |= c.next() != d.next();
    CHECK(differs);

    // Reference state update written out by hand.
    std::uint64_t s = 12345;
    Xorshift64Star g(12345);
    for (int i = 0; i < 16; ++i) {
        s ^= s >> 12;
        s ^= s << 25;
        s ^= s >> 27;
        CHECK(g.next() == s * 2685821657736338717ull);
    }
}

TEST_CASE("below(n) is uniform") {
    auto g = derive_stream(7, "uniformity");
    const std::uint64_t n = 37;
    const int draws = 100000;
    double sum = 0.0;
    for (int i = 0; i < draws; ++i) {
        const auto v = g.below(n);
        REQUIRE(v < n);
        sum += static_cast<double>(v);
    }
    const double mean = sum / draws;
    const double sigma = std::sqrt((static_cast<double>(n * n) - 1.0) / 12.0 / draws);
    CHECK(std::abs(mean - (n - 1) / 2.0) < 3 * sigma);
    CHECK(g.below(1) == 0);
}

TEST_CASE("load_lexicon") {
    TempDir dir;
    SUBCASE("single entry") {
        auto lex = load_lexicon(dir.write_lines("l.jsonl", {entry("disaster", "disaster#2", "syn", "catastrophe")}));
        CHECK(lex.size() == 1);
        REQUIRE(lex.entries("disaster", "disaster#2").size() == 1);
        CHECK(lex.entries("disaster", "disaster#2")[0].target == "catastrophe");
    }
    SUBCASE("worked example rows") {
        auto lex = load_lexicon(dir.write_lines(
            "l.jsonl", {entry("disaster", "disaster#2", "syn", "cataclysm"), entry("disaster", "disaster#2", "syn", "catastrophe"),
                        entry("disaster", "disaster#2", "hype", "misfortune"), entry("disaster", "disaster#2", "hypo", "tsunami"),
                        entry("disaster", "disaster#2", "hypo", "meltdown"), entry("disaster", "disaster#2", "cohyp", "adversity"),
                        entry("disaster", "disaster#2", "cohyp", "misadventure")}));
        CHECK(lex.size() == 7);
        const auto& e = lex.entries("disaster", "disaster#2");
        REQUIRE(e.size() == 7);
        CHECK(e[3].target == "tsunami");
        CHECK(e[4].target == "meltdown");
        CHECK(lex.senses("disaster") == std::vector<std::string>{"disaster#2"});
    }
    SUBCASE("empty file") {
        CHECK(load_lexicon(dir.write("l.jsonl", "")).empty());
    }
    SUBCASE("malformed line names the line") {
        const auto p = dir.write_lines("l.jsonl", {entry("a", "a#1", "syn", "b"), "{not json"});
        try {
            load_lexicon(p);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 2);
        }
        CHECK_THROWS_AS(load_lexicon(dir.write_lines("m.jsonl", {entry("a", "a#1", "antonym", "b")})), ParseError);
        CHECK_THROWS_AS(load_lexicon(dir.write_lines("n.jsonl", {entry("a", "", "syn", "b")})), ParseError);
        CHECK_THROWS_AS(load_lexicon(dir.write_lines("o.jsonl", {entry("a", "a#1", "dist", "b")})), ParseError);
    }
    SUBCASE("duplicate tuple") {
        const auto p = dir.write_lines("l.jsonl", {entry("a", "a#1", "syn", "b"), entry("a", "a#1", "syn", "b")});
        CHECK_THROWS_AS(load_lexicon(p), ValidationError);
    }
    SUBCASE("uppercase folded and multiword skipped") {
        auto lex = load_lexicon(dir.write_lines(
            "l.jsonl", {entry("Disaster", "disaster#2", "syn", "Catastrophe"), entry("disaster", "disaster#2", "hype", "natural_disaster")}));
        CHECK(lex.size() == 1);
        CHECK(lex.stats.uppercase_folded == 1);
        CHECK(lex.stats.multiword_skipped == 1);
        CHECK(lex.entries("disaster", "disaster#2")[0].target == "catastrophe");
    }
}

TEST_CASE("assemble_target_set caps") {
    SUBCASE("hand example one") {
        auto lex = lexicon_with({3, 2, 12, 20, 10});
        auto r = assemble_target_set("k", "k#1", lex);
        REQUIRE(r.accepted());
        CHECK(r.set->counts == std::array<std::size_t, 5>{3, 2, 10, 10, 10});
        CHECK(r.set->wordnet_count() == 25);
        CHECK(r.set->targets.size() == 35);
    }
    SUBCASE("hand example two") {
        auto r = assemble_target_set("k", "k#1", lexicon_with({2, 2, 10, 30, 10}));
        REQUIRE(r.accepted());
        CHECK(r.set->counts == std::array<std::size_t, 5>{2, 2, 10, 10, 10});
        CHECK(r.set->targets.size() == 34);
    }
    SUBCASE("wordnet cap truncates hypo first, keeps one") {
        auto r = assemble_target_set("k", "k#1", lexicon_with({10, 10, 10, 10, 10}));
        REQUIRE(r.accepted());
        CHECK(r.set->counts == std::array<std::size_t, 5>{10, 10, 1, 9, 10});
        // tail truncation in file order
        CHECK(r.set->targets[20].word == "hypo0");
        CHECK(r.set->targets[21].word == "cohyp0");
        CHECK(r.set->targets[29].word == "cohyp8");
    }
    SUBCASE("missing hypernyms rejected") {
        auto r = assemble_target_set("k", "k#1", lexicon_with({3, 0, 2, 2, 2}));
        CHECK_FALSE(r.accepted());
        CHECK(r.missing == std::vector<RelationType>{RelationType::Hype});
    }
    SUBCASE("dist override and underfill") {
        auto lex = lexicon_with({1, 1, 1, 1, 0});
        const std::vector<std::string> dist{"x", "y"};
        auto r = assemble_target_set("k", "k#1", lex, {}, &dist);
        REQUIRE(r.accepted());
        CHECK(r.set->counts[4] == 2);
        CHECK(r.set->dist_underfilled);
    }
    SUBCASE("order-independent and deterministic") {
        auto lex = lexicon_with({4, 5, 6, 7, 8});
        auto a = assemble_target_set("k", "k#1", lex), b = assemble_target_set("k", "k#1", lex);
        REQUIRE(a.accepted());
        REQUIRE(a.set->targets.size() == b.set->targets.size());
        for (std::size_t i = 0; i < a.set->targets.size(); ++i) CHECK(a.set->targets[i].word == b.set->targets[i].word);
    }
}

TEST_CASE("assemble_target_set matches the cap oracle on random count vectors") {
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> dist(0, 25);
    for (int trial = 0; trial < 500; ++trial) {
        std::array<int, 5> counts{};
        for (auto& c : counts) c = dist(rng);
        auto r = assemble_target_set("k", "k#1", lexicon_with(counts));
        const bool any_zero = std::any_of(counts.begin(), counts.end(), [](int c) { return c == 0; });
        REQUIRE(r.accepted() == !any_zero);
        if (!r.accepted()) continue;
        std::array<std::size_t, 5> in{};
        for (int i = 0; i < 5; ++i) in[i] = static_cast<std::size_t>(counts[i]);
        CHECK(r.set->counts == expected_counts(in, {}));
    }
}

TEST_CASE("dist_neighbors") {
    auto list = [](std::vector<std::string> words) {
        std::vector<Neighbor> n;
        double s = 0.9;
        for (auto& w : words) n.push_back({w, s -= 0.01});
        return normalize_neighbors("k", std::move(n));
    };
    auto r1 = dist_neighbors("k", list({"a", "b", "c"}), {"b"}, 2);
    CHECK(r1.words == std::vector<std::string>{"a", "c"});
    CHECK_FALSE(r1.underfilled);

    auto r2 = dist_neighbors("k", list({"a"}), {}, 10);
    CHECK(r2.words == std::vector<std::string>{"a"});
    CHECK(r2.underfilled);

    std::vector<std::string> xs;
    for (int i = 1; i <= 15; ++i) xs.push_back("x" + std::to_string(i));
    auto r3 = dist_neighbors("k", list(xs), {"x2", "x5"}, 10);
    CHECK(r3.words == std::vector<std::string>{"x1", "x3", "x4", "x6", "x7", "x8", "x9", "x10", "x11", "x12"});
}

TEST_CASE("normalize_neighbors") {
    auto l = normalize_neighbors("k", {{"b", 0.5}, {"k", 0.99}, {"a", 0.5}, {"c", 0.7}});
    CHECK(l.words() == std::vector<std::string>{"c", "a", "b"});
    CHECK_THROWS_AS(normalize_neighbors("k", {{"a", 0.5}, {"a", 0.4}}), ValidationError);
    CHECK_THROWS_AS(normalize_neighbors("k", {{"a", 1.5}}), ValidationError);
}
