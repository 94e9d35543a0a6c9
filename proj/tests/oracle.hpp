/*
 * Copyright (c) 2026 the madcrow authors
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstddef>
#include <vector>

#include "madcrow/align.hpp"

// Naive full-matrix local alignment, kept deliberately separate from the
// library kernels: this is the independent reference they are checked
// against, so it must not share their code.
namespace oracle {

inline madcrow::Score sw_full_matrix(const std::vector<madcrow::Symbol>& a,
                                     const std::vector<madcrow::Symbol>& b,
                                     const madcrow::ScoringScheme& s) {
    std::vector<std::vector<madcrow::Score>> h(
        a.size() + 1, std::vector<madcrow::Score>(b.size() + 1, 0));
    madcrow::Score best = 0;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            madcrow::Score v = h[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? s.match : s.mismatch);
            if (h[i - 1][j] + s.gap > v) v = h[i - 1][j] + s.gap;
            if (h[i][j - 1] + s.gap > v) v = h[i][j - 1] + s.gap;
            if (v < 0) v = 0;
            h[i][j] = v;
            if (v > best) best = v;
        }
    }
    return best;
}

} // namespace oracle
