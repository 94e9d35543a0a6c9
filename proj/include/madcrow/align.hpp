/*
 * Copyright (c) 2026 the madcrow authors
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "madcrow/error.hpp"
#include "madcrow/trace.hpp"

namespace madcrow {

using Score = std::int32_t;

/// Local-alignment weights. Linear gap model; scores stay integral so the
/// scalar and wavefront kernels can be compared bit-exactly.
struct ScoringScheme {
    Score match = 2;
    Score mismatch = -1;
    Score gap = -1;

    void validate() const {
        if (match <= 0 || mismatch >= 0 || gap >= 0)
            throw Error(Errc::invalid_argument,
                        "scoring scheme requires match > 0, mismatch < 0, gap < 0");
    }

    bool operator==(const ScoringScheme&) const = default;
};

enum class AlignOp : std::uint8_t {
    match,
    mismatch,
    gap_a, // gap in a: consumes one symbol of b
    gap_b, // gap in b: consumes one symbol of a
};

struct AlignmentResult {
    Score score = 0;
    std::size_t a_begin = 0, a_end = 0; // half-open span into a
    std::size_t b_begin = 0, b_end = 0; // half-open span into b
    std::vector<AlignOp> ops;
    std::vector<std::pair<std::size_t, std::size_t>> matched_pairs;
};

struct SimilarityScore {
    Score raw = 0;
    double normalized = 0.0;          // raw / (match * min(len_a, len_b))
    double normalized_vs_query = 0.0; // raw / (match * len_query)
};

inline double normalized_similarity(Score raw, const ScoringScheme& s, std::size_t len_a,
                                    std::size_t len_b) {
    std::size_t shorter = std::min(len_a, len_b);
    if (shorter == 0) return 0.0;
    return static_cast<double>(raw) / (static_cast<double>(s.match) * static_cast<double>(shorter));
}

inline double normalized_vs_query(Score raw, const ScoringScheme& s, std::size_t len_query) {
    if (len_query == 0) return 0.0;
    return static_cast<double>(raw) /
           (static_cast<double>(s.match) * static_cast<double>(len_query));
}

inline SimilarityScore similarity(Score raw, const ScoringScheme& s, std::size_t len_a,
                                  std::size_t len_b, std::size_t len_query) {
    return {raw, normalized_similarity(raw, s, len_a, len_b),
            normalized_vs_query(raw, s, len_query)};
}

/// Best local-alignment score, two rolling rows, O(min) memory.
inline Score sw_score(std::span<const Symbol> a, std::span<const Symbol> b,
                      const ScoringScheme& s) {
    const std::size_t m = a.size(), n = b.size();
    if (m == 0 || n == 0) return 0;
    std::vector<Score> prev(n + 1, 0), cur(n + 1, 0);
    Score best = 0;
    for (std::size_t i = 1; i <= m; ++i) {
        const Symbol ai = a[i - 1];
        cur[0] = 0;
        for (std::size_t j = 1; j <= n; ++j) {
            Score v = prev[j - 1] + (ai == b[j - 1] ? s.match : s.mismatch);
            v = std::max(v, prev[j] + s.gap);
            v = std::max(v, cur[j - 1] + s.gap);
            v = std::max(v, Score{0});
            cur[j] = v;
            best = std::max(best, v);
        }
        std::swap(prev, cur);
    }
    return best;
}

namespace detail {

/// Anti-diagonal (wavefront) evaluation. Cells on one anti-diagonal are
/// mutually independent, so the inner loop carries no dependency and is
/// processed in fixed-width blocks of `Lanes` cells; a device backend would
/// map one block element per SIMT lane. Three rotating diagonal buffers,
/// all-zero initialized, serve boundary reads: an index not yet written on
/// its buffer's cycle is exactly a row-0/column-0 cell and reads 0.
template <int Lanes>
inline Score wavefront_score_impl(std::span<const Symbol> a, std::span<const Symbol> b,
                                  const ScoringScheme& s) {
    const std::size_t m = a.size(), n = b.size();
    if (m == 0 || n == 0) return 0;

    // b reversed so that along a diagonal both inputs advance with stride +1.
    std::vector<Symbol> brev(n);
    for (std::size_t j = 0; j < n; ++j) brev[j] = b[n - 1 - j];

    std::vector<Score> buf0(m + 1, 0), buf1(m + 1, 0), buf2(m + 1, 0);
    Score* prev2 = buf0.data();
    Score* prev = buf1.data();
    Score* cur = buf2.data();

    Score lane_best[Lanes] = {};
    Score best = 0;

    const Symbol* ap = a.data();
    const Symbol* bp = brev.data();

    for (std::size_t d = 2; d <= m + n; ++d) {
        const std::size_t ilo = d > n ? d - n : 1;
        const std::size_t ihi = std::min(m, d - 1);
        // brev index of row i on diagonal d: i + boff, where boff = n - d.
        const std::ptrdiff_t boff =
            static_cast<std::ptrdiff_t>(n) - static_cast<std::ptrdiff_t>(d);
        const Score gap = s.gap, match = s.match, mismatch = s.mismatch;

        std::size_t i = ilo;
        for (; i + Lanes <= ihi + 1; i += Lanes) {
            for (int k = 0; k < Lanes; ++k) {
                const std::size_t row = i + k;
                const Symbol bsym = bp[static_cast<std::ptrdiff_t>(row) + boff];
                Score v = prev2[row - 1] + (ap[row - 1] == bsym ? match : mismatch);
                v = std::max(v, prev[row - 1] + gap);
                v = std::max(v, prev[row] + gap);
                v = std::max(v, Score{0});
                cur[row] = v;
                lane_best[k] = std::max(lane_best[k], v);
            }
        }
        for (; i <= ihi; ++i) {
            const Symbol bsym = bp[static_cast<std::ptrdiff_t>(i) + boff];
            Score v = prev2[i - 1] + (ap[i - 1] == bsym ? match : mismatch);
            v = std::max(v, prev[i - 1] + gap);
            v = std::max(v, prev[i] + gap);
            v = std::max(v, Score{0});
            cur[i] = v;
            best = std::max(best, v);
        }

        Score* recycled = prev2;
        prev2 = prev;
        prev = cur;
        cur = recycled;
    }
    for (int k = 0; k < Lanes; ++k) best = std::max(best, lane_best[k]);
    return best;
}

} // namespace detail

/// Wavefront kernel; bit-exact equal to sw_score for every input and lane
/// count. `lanes` selects the block width (1 degenerates to cell-at-a-time
/// traversal of each diagonal).
inline Score sw_score_wavefront(std::span<const Symbol> a, std::span<const Symbol> b,
                                const ScoringScheme& s, unsigned lanes) {
    if (lanes < 1) throw Error(Errc::invalid_argument, "lanes must be >= 1");
    switch (lanes) {
        case 1: return detail::wavefront_score_impl<1>(a, b, s);
        case 2: return detail::wavefront_score_impl<2>(a, b, s);
        case 4: return detail::wavefront_score_impl<4>(a, b, s);
        case 8: return detail::wavefront_score_impl<8>(a, b, s);
        case 16: return detail::wavefront_score_impl<16>(a, b, s);
        default: return detail::wavefront_score_impl<8>(a, b, s);
    }
}

/// Full alignment with traceback. Among equal-score maxima the smallest
/// (end_a, end_b) wins lexicographically; in traceback the preference is
/// diagonal, then gap_b (up), then gap_a (left). Both rules pin one
/// deterministic result across kernels and platforms.
inline AlignmentResult sw_align(std::span<const Symbol> a, std::span<const Symbol> b,
                                const ScoringScheme& s) {
    AlignmentResult res;
    const std::size_t m = a.size(), n = b.size();
    if (m == 0 || n == 0) return res;

    const std::size_t stride = n + 1;
    std::vector<Score> h((m + 1) * stride, 0);
    Score best = 0;
    std::size_t best_i = 0, best_j = 0;
    for (std::size_t i = 1; i <= m; ++i) {
        const Symbol ai = a[i - 1];
        Score* row = h.data() + i * stride;
        const Score* up = row - stride;
        for (std::size_t j = 1; j <= n; ++j) {
            Score v = up[j - 1] + (ai == b[j - 1] ? s.match : s.mismatch);
            v = std::max(v, up[j] + s.gap);
            v = std::max(v, row[j - 1] + s.gap);
            v = std::max(v, Score{0});
            row[j] = v;
            if (v > best) { // first maximum in row-major order = smallest (i, j)
                best = v;
                best_i = i;
                best_j = j;
            }
        }
    }
    res.score = best;
    if (best == 0) return res;

    std::size_t i = best_i, j = best_j;
    std::vector<AlignOp> rops;
    while (i > 0 && j > 0 && h[i * stride + j] > 0) {
        const Score v = h[i * stride + j];
        const bool eq = a[i - 1] == b[j - 1];
        if (v == h[(i - 1) * stride + (j - 1)] + (eq ? s.match : s.mismatch)) {
            rops.push_back(eq ? AlignOp::match : AlignOp::mismatch);
            --i;
            --j;
        } else if (v == h[(i - 1) * stride + j] + s.gap) {
            rops.push_back(AlignOp::gap_b);
            --i;
        } else {
            rops.push_back(AlignOp::gap_a);
            --j;
        }
    }
    res.a_begin = i;
    res.a_end = best_i;
    res.b_begin = j;
    res.b_end = best_j;
    res.ops.assign(rops.rbegin(), rops.rend());

    std::size_t ai = res.a_begin, bj = res.b_begin;
    for (AlignOp op : res.ops) {
        switch (op) {
            case AlignOp::match: res.matched_pairs.emplace_back(ai, bj); ++ai; ++bj; break;
            case AlignOp::mismatch: ++ai; ++bj; break;
            case AlignOp::gap_b: ++ai; break;
            case AlignOp::gap_a: ++bj; break;
        }
    }
    return res;
}

/// Recomputes the score by replaying ops over the spans; throws if the ops
/// do not consume the spans exactly or disagree with the symbol data.
inline Score replay_score(const AlignmentResult& r, std::span<const Symbol> a,
                          std::span<const Symbol> b, const ScoringScheme& s) {
    std::size_t i = r.a_begin, j = r.b_begin;
    Score total = 0;
    for (AlignOp op : r.ops) {
        switch (op) {
            case AlignOp::match:
                if (i >= a.size() || j >= b.size() || a[i] != b[j])
                    throw Error(Errc::invalid_argument, "replay: bad match op");
                total += s.match;
                ++i;
                ++j;
                break;
            case AlignOp::mismatch:
                if (i >= a.size() || j >= b.size() || a[i] == b[j])
                    throw Error(Errc::invalid_argument, "replay: bad mismatch op");
                total += s.mismatch;
                ++i;
                ++j;
                break;
            case AlignOp::gap_b:
                if (i >= a.size()) throw Error(Errc::invalid_argument, "replay: gap_b past end");
                total += s.gap;
                ++i;
                break;
            case AlignOp::gap_a:
                if (j >= b.size()) throw Error(Errc::invalid_argument, "replay: gap_a past end");
                total += s.gap;
                ++j;
                break;
        }
    }
    if (i != r.a_end || j != r.b_end)
        throw Error(Errc::invalid_argument, "replay: spans not consumed exactly");
    return total;
}

/// All-pairs score matrix. The diagonal is the self-alignment identity
/// match_score * len; off-diagonal entries come from sw_score.
inline std::vector<std::vector<Score>> batch_pairwise(
    const std::vector<std::vector<Symbol>>& seqs, const ScoringScheme& s) {
    if (seqs.size() < 2)
        throw Error(Errc::too_few_sequences, "batch_pairwise needs at least 2 sequences");
    const std::size_t n = seqs.size();
    std::vector<std::vector<Score>> matrix(n, std::vector<Score>(n, 0));
    for (std::size_t i = 0; i < n; ++i) {
        matrix[i][i] = s.match * static_cast<Score>(seqs[i].size());
        for (std::size_t j = i + 1; j < n; ++j) {
            Score v = sw_score(seqs[i], seqs[j], s);
            matrix[i][j] = v;
            matrix[j][i] = v;
        }
    }
    return matrix;
}

} // namespace madcrow
