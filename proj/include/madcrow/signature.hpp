/*
 * Copyright (c) 2026 the madcrow authors
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "madcrow/align.hpp"
#include "madcrow/error.hpp"
#include "madcrow/trace.hpp"
#include "madcrow/util.hpp"

namespace madcrow {

/// N traces of one attack, all encoded over the same alphabet.
struct AttackTraceSet {
    std::string attack_id;
    std::vector<CallSequence> sequences;
    std::string alphabet_ref;
};

struct Segment {
    std::vector<Symbol> symbols;
    std::uint32_t index = 0;

    bool operator==(const Segment&) const = default;
};

struct SignatureProvenance {
    std::uint32_t trace_count = 0;
    std::uint32_t rounds = 0;

    bool operator==(const SignatureProvenance&) const = default;
};

struct Signature {
    std::string attack_id;
    std::vector<Segment> segments;
    ScoringScheme scheme;
    double default_threshold = 0.8;
    SignatureProvenance provenance;
    std::string alphabet_ref;

    std::size_t total_symbols() const {
        std::size_t n = 0;
        for (const Segment& seg : segments) n += seg.symbols.size();
        return n;
    }

    bool operator==(const Signature&) const = default;
};

/// Matched symbols of a best pairwise alignment plus, per consensus
/// position, the length of the run of non-match ops immediately before it.
struct Consensus {
    std::vector<Symbol> symbols;
    std::vector<std::uint32_t> gap_runs; // same length as symbols

    bool operator==(const Consensus&) const = default;
};

inline Consensus consensus_pair(std::span<const Symbol> a, std::span<const Symbol> b,
                                const ScoringScheme& s) {
    Consensus c;
    AlignmentResult r = sw_align(a, b, s);
    std::uint32_t run = 0;
    std::size_t ai = r.a_begin;
    for (AlignOp op : r.ops) {
        if (op == AlignOp::match) {
            c.symbols.push_back(a[ai]);
            c.gap_runs.push_back(run);
            run = 0;
        } else {
            ++run;
        }
        if (op == AlignOp::match || op == AlignOp::mismatch || op == AlignOp::gap_b) ++ai;
    }
    return c;
}

namespace detail {

struct HalveOutput {
    std::vector<std::vector<Symbol>> seqs;
    std::vector<std::vector<std::uint32_t>> gap_runs; // empty for the passthrough
};

/// Greedy global-best pairing from the full pairwise score matrix. Pairs are
/// extracted best-first (score ties resolved to the lowest (i, j) index
/// pair) and replaced by their consensus; an odd leftover passes through.
inline HalveOutput halve_round_ex(const std::vector<std::vector<Symbol>>& seqs,
                                  const ScoringScheme& s) {
    if (seqs.size() < 2)
        throw Error(Errc::too_few_sequences, "halve_round needs at least 2 sequences");
    auto matrix = batch_pairwise(seqs, s);
    const std::size_t n = seqs.size();
    std::vector<bool> used(n, false);
    HalveOutput out;
    for (std::size_t pairs = n / 2; pairs > 0; --pairs) {
        Score best = -1;
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (used[i]) continue;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (used[j]) continue;
                if (matrix[i][j] > best) {
                    best = matrix[i][j];
                    bi = i;
                    bj = j;
                }
            }
        }
        used[bi] = used[bj] = true;
        Consensus c = consensus_pair(seqs[bi], seqs[bj], s);
        out.seqs.push_back(std::move(c.symbols));
        out.gap_runs.push_back(std::move(c.gap_runs));
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!used[i]) {
            out.seqs.push_back(seqs[i]);
            out.gap_runs.emplace_back();
        }
    }
    return out;
}

} // namespace detail

inline std::vector<std::vector<Symbol>> halve_round(const std::vector<std::vector<Symbol>>& seqs,
                                                    const ScoringScheme& s) {
    return detail::halve_round_ex(seqs, s).seqs;
}

/// Splits the pattern before every position whose preceding gap run reaches
/// g_split and discards pieces shorter than m_min.
inline std::vector<Segment> segmentize(std::span<const Symbol> pattern,
                                       std::span<const std::uint32_t> gap_runs,
                                       std::uint32_t g_split, std::uint32_t m_min) {
    if (g_split < 1 || m_min < 1)
        throw Error(Errc::invalid_argument, "g_split and m_min must be >= 1");
    if (pattern.size() != gap_runs.size())
        throw Error(Errc::invalid_argument, "gap_runs length must equal pattern length");
    std::vector<Segment> segments;
    std::size_t start = 0;
    auto emit = [&](std::size_t end) {
        if (end - start >= m_min) {
            Segment seg;
            seg.symbols.assign(pattern.begin() + static_cast<std::ptrdiff_t>(start),
                               pattern.begin() + static_cast<std::ptrdiff_t>(end));
            seg.index = static_cast<std::uint32_t>(segments.size());
            segments.push_back(std::move(seg));
        }
        start = end;
    };
    for (std::size_t pos = 1; pos < pattern.size(); ++pos)
        if (gap_runs[pos] >= g_split) emit(pos);
    emit(pattern.size());
    return segments;
}

struct DistillParams {
    std::uint32_t g_split = 3;
    std::uint32_t m_min = 4;
    double default_threshold = 0.8;
};

/// Halves the trace set round by round until one pattern remains, then
/// segments it on the gap runs of the final consensus step.
inline Signature distill(const AttackTraceSet& ts, const ScoringScheme& s,
                         const DistillParams& params = {}) {
    if (ts.sequences.size() < 2)
        throw Error(Errc::too_few_sequences, "distill needs at least 2 traces");
    for (const CallSequence& seq : ts.sequences)
        if (seq.symbols.size() < params.m_min)
            throw Error(Errc::invalid_argument,
                        "trace shorter than the minimum segment length");

    std::vector<std::vector<Symbol>> pool;
    pool.reserve(ts.sequences.size());
    for (const CallSequence& seq : ts.sequences) pool.push_back(seq.symbols);

    std::uint32_t rounds = 0;
    std::vector<std::uint32_t> final_runs;
    while (pool.size() > 1) {
        detail::HalveOutput out = detail::halve_round_ex(pool, s);
        pool = std::move(out.seqs);
        if (pool.size() == 1) final_runs = std::move(out.gap_runs[0]);
        ++rounds;
    }

    Signature sig;
    sig.attack_id = ts.attack_id;
    sig.scheme = s;
    sig.default_threshold = params.default_threshold;
    sig.provenance = {static_cast<std::uint32_t>(ts.sequences.size()), rounds};
    sig.alphabet_ref = ts.alphabet_ref;
    sig.segments = segmentize(pool[0], final_runs, params.g_split, params.m_min);
    if (sig.segments.empty())
        throw Error(Errc::degenerate_signature,
                    "traces of '" + ts.attack_id + "' share too little content");
    return sig;
}

/// One signature record of the versioned signature file.
inline std::string format_signature_record(const Signature& sig) {
    std::string out;
    out += "attack " + sig.attack_id + "\n";
    out += "scheme " + std::to_string(sig.scheme.match) + " " +
           std::to_string(sig.scheme.mismatch) + " " + std::to_string(sig.scheme.gap) + "\n";
    out += "threshold " + format_fixed4(sig.default_threshold) + "\n";
    out += "provenance " + std::to_string(sig.provenance.trace_count) + " " +
           std::to_string(sig.provenance.rounds) + "\n";
    for (const Segment& seg : sig.segments) {
        out += "segment " + std::to_string(seg.index);
        for (Symbol sym : seg.symbols) out += " " + std::to_string(sym);
        out += "\n";
    }
    out += "end\n";
    return out;
}

} // namespace madcrow
