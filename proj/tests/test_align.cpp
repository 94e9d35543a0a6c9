/*
 * Copyright (c) 2026 the madcrow authors
 * SPDX-License-Identifier: Apache-2.0
 */
#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "madcrow/align.hpp"
#include "oracle.hpp"
#include "test_helpers.hpp"

using namespace madcrow;

namespace {
const ScoringScheme kDefault{};

std::vector<Symbol> syms(std::initializer_list<Symbol> init) { return init; }
} // namespace

TEST_CASE("identical inputs score match * length", "[align]") {
    auto a = syms({5, 7, 9, 2});
    CHECK(sw_score(a, a, kDefault) == 8);
    CHECK(oracle::sw_full_matrix(a, a, kDefault) == 8);
}

TEST_CASE("local alignment floors at zero", "[align]") {
    auto a = syms({1});
    auto b = syms({2});
    CHECK(sw_score(a, b, kDefault) == 0);
    CHECK(sw_score(a, {}, kDefault) == 0);
    CHECK(sw_score({}, b, kDefault) == 0);
}

TEST_CASE("gap bridging beats split matches", "[align]") {
    auto a = syms({1, 9, 2, 3});
    auto b = syms({1, 2, 3});
    // oracle first: the frozen value 5 (match, gap, match, match)
    CHECK(oracle::sw_full_matrix(a, b, kDefault) == 5);
    CHECK(sw_score(a, b, kDefault) == 5);

    AlignmentResult r = sw_align(a, b, kDefault);
    CHECK(r.score == 5);
    CHECK(r.matched_pairs ==
          std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}, {2, 1}, {3, 2}});
    REQUIRE(r.ops.size() == 4);
    CHECK(r.ops[0] == AlignOp::match);
    CHECK(r.ops[1] == AlignOp::gap_b); // gap in b consuming a[1]
    CHECK(r.ops[2] == AlignOp::match);
    CHECK(r.ops[3] == AlignOp::match);
    CHECK(replay_score(r, a, b, kDefault) == r.score);
}

TEST_CASE("identity traceback covers both inputs with matches", "[align]") {
    auto a = syms({3, 1, 4, 1});
    AlignmentResult r = sw_align(a, a, kDefault);
    CHECK(r.score == 8);
    CHECK(r.a_begin == 0);
    CHECK(r.a_end == 4);
    CHECK(r.b_begin == 0);
    CHECK(r.b_end == 4);
    CHECK(r.ops == std::vector<AlignOp>(4, AlignOp::match));
}

TEST_CASE("empty input yields the empty alignment", "[align]") {
    AlignmentResult r = sw_align({}, syms({1, 2}), kDefault);
    CHECK(r.score == 0);
    CHECK(r.ops.empty());
    CHECK(r.matched_pairs.empty());
    CHECK(r.a_begin == r.a_end);
    CHECK(replay_score(r, {}, syms({1, 2}), kDefault) == 0);
}

TEST_CASE("score is zero iff ops are empty", "[align]") {
    std::mt19937_64 rng(42);
    for (int i = 0; i < 200; ++i) {
        auto a = testutil::random_symbols(rng, 24, 16);
        auto b = testutil::random_symbols(rng, 24, 16);
        AlignmentResult r = sw_align(a, b, kDefault);
        CHECK((r.score == 0) == r.ops.empty());
        if (!r.matched_pairs.empty()) {
            for (std::size_t k = 1; k < r.matched_pairs.size(); ++k) {
                CHECK(r.matched_pairs[k - 1].first < r.matched_pairs[k].first);
                CHECK(r.matched_pairs[k - 1].second < r.matched_pairs[k].second);
            }
        }
    }
}

TEST_CASE("1000 random pairs agree with the full-matrix oracle", "[align][oracle]") {
    std::mt19937_64 rng(20260101);
    for (int i = 0; i < 1000; ++i) {
        auto a = testutil::random_symbols(rng, 64, 16);
        auto b = testutil::random_symbols(rng, 64, 16);
        Score expect = oracle::sw_full_matrix(a, b, kDefault);
        CHECK(sw_score(a, b, kDefault) == expect);
        AlignmentResult r = sw_align(a, b, kDefault);
        CHECK(r.score == expect);
        CHECK(replay_score(r, a, b, kDefault) == expect);
    }
}

TEST_CASE("score is symmetric under a symmetric scheme", "[align]") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 100; ++i) {
        auto a = testutil::random_symbols(rng, 48, 8);
        auto b = testutil::random_symbols(rng, 48, 8);
        CHECK(sw_score(a, b, kDefault) == sw_score(b, a, kDefault));
    }
}

TEST_CASE("score bounds and identity attainment", "[align]") {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 100; ++i) {
        auto a = testutil::random_symbols(rng, 48, 4);
        auto b = testutil::random_symbols(rng, 48, 4);
        Score v = sw_score(a, b, kDefault);
        CHECK(v >= 0);
        CHECK(v <= kDefault.match *
                       static_cast<Score>(std::min(a.size(), b.size())));
    }
    // upper bound attained when one input is contained in the other
    auto inner = syms({1, 2, 3, 0});
    std::vector<Symbol> outer{7, 7};
    outer.insert(outer.end(), inner.begin(), inner.end());
    outer.push_back(5);
    CHECK(sw_score(inner, outer, kDefault) == 8);
}

TEST_CASE("appending symbols never decreases the score", "[align]") {
    std::mt19937_64 rng(9);
    for (int i = 0; i < 50; ++i) {
        auto a = testutil::random_symbols(rng, 32, 6);
        auto b = testutil::random_symbols(rng, 32, 6);
        Score base = sw_score(a, b, kDefault);
        auto a2 = a;
        a2.push_back(static_cast<Symbol>(rng() % 6));
        CHECK(sw_score(a2, b, kDefault) >= base);
        auto b2 = b;
        b2.push_back(static_cast<Symbol>(rng() % 6));
        CHECK(sw_score(a, b2, kDefault) >= base);
    }
}

TEST_CASE("wavefront kernel equals scalar for all lane counts", "[align][wavefront]") {
    std::mt19937_64 rng(123);
    for (int i = 0; i < 150; ++i) {
        auto a = testutil::random_symbols(rng, 96, 16);
        auto b = testutil::random_symbols(rng, 96, 16);
        Score expect = sw_score(a, b, kDefault);
        for (unsigned lanes : {1u, 2u, 3u, 4u, 8u, 16u, 32u})
            CHECK(sw_score_wavefront(a, b, kDefault, lanes) == expect);
    }
    // degenerate shapes
    CHECK(sw_score_wavefront({}, {}, kDefault, 4) == 0);
    auto one = syms({3});
    CHECK(sw_score_wavefront(one, one, kDefault, 8) == 2);
    CHECK_THROWS_AS(sw_score_wavefront(one, one, kDefault, 0), Error);
}

TEST_CASE("wavefront matches scalar on long skewed inputs", "[align][wavefront]") {
    std::mt19937_64 rng(99);
    auto a = testutil::random_symbols_exact(rng, 1500, 16);
    auto b = testutil::random_symbols_exact(rng, 37, 16);
    Score expect = sw_score(a, b, kDefault);
    CHECK(sw_score_wavefront(a, b, kDefault, 8) == expect);
    CHECK(sw_score_wavefront(b, a, kDefault, 8) == expect);
}

TEST_CASE("non-default schemes agree across kernels and oracle", "[align]") {
    std::mt19937_64 rng(5150);
    ScoringScheme schemes[] = {{3, -2, -1}, {1, -1, -2}, {5, -4, -3}};
    for (const auto& s : schemes) {
        for (int i = 0; i < 100; ++i) {
            auto a = testutil::random_symbols(rng, 40, 8);
            auto b = testutil::random_symbols(rng, 40, 8);
            Score expect = oracle::sw_full_matrix(a, b, s);
            CHECK(sw_score(a, b, s) == expect);
            CHECK(sw_score_wavefront(a, b, s, 4) == expect);
            AlignmentResult r = sw_align(a, b, s);
            CHECK(r.score == expect);
            CHECK(replay_score(r, a, b, s) == expect);
        }
    }
}

TEST_CASE("traceback tie rules are deterministic", "[align]") {
    // two equally good end cells: the smaller (end_a, end_b) wins
    auto a = syms({1, 2, 1, 2});
    auto b = syms({1, 2});
    AlignmentResult r1 = sw_align(a, b, kDefault);
    AlignmentResult r2 = sw_align(a, b, kDefault);
    CHECK(r1.a_end == 2); // first occurrence, not the later equal-score one
    CHECK(r1.ops == r2.ops);
    CHECK(r1.a_begin == r2.a_begin);
}

TEST_CASE("batch_pairwise matches individual calls and is symmetric", "[align]") {
    std::mt19937_64 rng(31337);
    std::vector<std::vector<Symbol>> seqs;
    for (int i = 0; i < 8; ++i) seqs.push_back(testutil::random_symbols(rng, 32, 8));
    seqs[1] = seqs[0]; // force an identical pair
    auto matrix = batch_pairwise(seqs, kDefault);
    REQUIRE(matrix.size() == seqs.size());
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        CHECK(matrix[i][i] == kDefault.match * static_cast<Score>(seqs[i].size()));
        for (std::size_t j = 0; j < seqs.size(); ++j) {
            CHECK(matrix[i][j] == matrix[j][i]);
            if (i != j) CHECK(matrix[i][j] == sw_score(seqs[i], seqs[j], kDefault));
        }
    }
    CHECK(matrix[0][1] == kDefault.match * static_cast<Score>(seqs[0].size()));

    try {
        batch_pairwise({seqs[0]}, kDefault);
        FAIL("expected too_few_sequences");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::too_few_sequences);
    }
}

TEST_CASE("similarity normalizations", "[align]") {
    ScoringScheme s;
    CHECK(normalized_similarity(8, s, 4, 10) == 1.0);
    CHECK(normalized_vs_query(8, s, 10) == 0.4);
    CHECK(normalized_similarity(0, s, 0, 10) == 0.0);
    SimilarityScore sim = similarity(6, s, 4, 8, 4);
    CHECK(sim.raw == 6);
    CHECK(sim.normalized == 0.75);
    CHECK(sim.normalized_vs_query == 0.75);
    ScoringScheme bad{0, -1, -1};
    CHECK_THROWS_AS(bad.validate(), Error);
}
