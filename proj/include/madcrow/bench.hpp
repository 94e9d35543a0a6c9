/*
 * Copyright (c) 2026 the madcrow authors
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <chrono>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "madcrow/align.hpp"
#include "madcrow/error.hpp"

namespace madcrow {

struct BenchRow {
    std::string kernel; // "scalar" or "wavefront"
    std::size_t length = 0;
    unsigned lanes = 0; // 0 for scalar
    double cells_per_second = 0.0;
    double speedup_vs_scalar = 1.0;
};

/// Times the scalar and wavefront kernels on random symbol pairs. With
/// `verify` set, every wavefront result is checked against the scalar one
/// before any timing is reported.
inline std::vector<BenchRow> run_alignment_bench(const std::vector<std::size_t>& lengths,
                                                 const std::vector<unsigned>& lane_counts,
                                                 int iters, bool verify,
                                                 std::uint64_t seed = 0x5eed) {
    if (iters < 1) throw Error(Errc::invalid_argument, "iters must be >= 1");
    ScoringScheme scheme;
    std::vector<BenchRow> rows;
    std::mt19937_64 rng(seed);

    for (std::size_t len : lengths) {
        std::vector<Symbol> a(len), b(len);
        for (auto& s : a) s = static_cast<Symbol>(rng() % 16);
        for (auto& s : b) s = static_cast<Symbol>(rng() % 16);

        if (verify) {
            Score scalar = sw_score(a, b, scheme);
            for (unsigned lanes : lane_counts)
                if (sw_score_wavefront(a, b, scheme, lanes) != scalar)
                    throw Error(Errc::invalid_argument,
                                "wavefront/scalar mismatch at length " + std::to_string(len) +
                                    ", lanes " + std::to_string(lanes));
        }

        const double cells = static_cast<double>(len) * static_cast<double>(len) * iters;
        auto time_it = [&](auto&& fn) {
            auto t0 = std::chrono::steady_clock::now();
            Score sink = 0;
            for (int i = 0; i < iters; ++i) sink += fn();
            auto t1 = std::chrono::steady_clock::now();
            double secs = std::chrono::duration<double>(t1 - t0).count();
            // keep the optimizer honest
            if (sink == -1) throw Error(Errc::invalid_argument, "unreachable");
            return secs > 0.0 ? cells / secs : 0.0;
        };

        double scalar_cps = time_it([&] { return sw_score(a, b, scheme); });
        rows.push_back({"scalar", len, 0, scalar_cps, 1.0});
        for (unsigned lanes : lane_counts) {
            double cps = time_it([&] { return sw_score_wavefront(a, b, scheme, lanes); });
            rows.push_back({"wavefront", len, lanes, cps,
                            scalar_cps > 0.0 ? cps / scalar_cps : 0.0});
        }
    }
    return rows;
}

} // namespace madcrow
