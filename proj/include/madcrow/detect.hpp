/*
 * Copyright (c) 2026 the madcrow authors
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "madcrow/align.hpp"
#include "madcrow/error.hpp"
#include "madcrow/signature.hpp"
#include "madcrow/trace.hpp"
#include "madcrow/util.hpp"

namespace madcrow {

struct DetectorConfig {
    double tau = 0.8;                              // normalized hit threshold
    std::size_t window_capacity = 4096;            // W, symbols per stream
    std::int64_t correlation_window_us = 300'000'000;
    std::uint32_t rescan_stride = 16;              // events between scans
    std::int64_t heartbeat_period_us = 2'000'000;  // handshake period
    std::uint32_t heartbeat_misses = 3;            // K missed periods before alert

    void validate() const {
        if (tau <= 0.0 || tau > 1.0)
            throw Error(Errc::invalid_argument, "tau must be in (0, 1]");
        if (rescan_stride < 1 || window_capacity < 1 || heartbeat_misses < 1)
            throw Error(Errc::invalid_argument, "strides and capacities must be >= 1");
    }
};

/// Per-stream sliding window of the most recent W (symbol, timestamp) pairs.
class MonitoredStream {
public:
    MonitoredStream(std::string id, std::size_t capacity, std::int64_t now_us)
        : id_(std::move(id)), buf_(capacity), last_heartbeat_us(now_us) {}

    void push(Symbol sym, std::int64_t ts_us) {
        buf_[head_] = {sym, ts_us};
        head_ = (head_ + 1) % buf_.size();
        if (size_ < buf_.size()) ++size_;
        ++cursor_;
    }

    const std::string& id() const { return id_; }
    std::size_t size() const { return size_; }
    std::size_t capacity() const { return buf_.size(); }

    /// Count of symbols ever ingested; window covers [cursor-size, cursor).
    std::uint64_t cursor() const { return cursor_; }
    std::uint64_t window_begin() const { return cursor_ - size_; }

    /// Copies the most recent `count` entries, oldest first.
    void linearize(std::size_t count, std::vector<Symbol>& syms,
                   std::vector<std::int64_t>& ts) const {
        count = std::min(count, size_);
        syms.resize(count);
        ts.resize(count);
        std::size_t start = (head_ + buf_.size() - count) % buf_.size();
        for (std::size_t k = 0; k < count; ++k) {
            const auto& e = buf_[(start + k) % buf_.size()];
            syms[k] = e.first;
            ts[k] = e.second;
        }
    }

    std::int64_t last_heartbeat_us = 0;
    bool liveness_alerted = false;

private:
    std::string id_;
    std::vector<std::pair<Symbol, std::int64_t>> buf_;
    std::size_t head_ = 0;
    std::size_t size_ = 0;
    std::uint64_t cursor_ = 0;
};

struct SegmentHit {
    std::string signature_id;
    std::uint32_t segment_index = 0;
    std::string stream_id;
    Score raw_score = 0;
    double normalized_vs_query = 0.0;
    std::uint64_t span_begin = 0; // absolute symbol offsets into the stream
    std::uint64_t span_end = 0;
    std::int64_t time_us = 0;

    bool operator==(const SegmentHit&) const = default;
};

struct AttackState {
    std::string signature_id;
    std::vector<bool> found;
    std::vector<SegmentHit> hits;
    std::int64_t first_hit_us = 0;
    std::int64_t last_hit_us = 0;

    AttackState() = default;
    AttackState(std::string sig_id, std::size_t segment_count)
        : signature_id(std::move(sig_id)), found(segment_count, false) {}
};

struct Alert {
    enum class Kind { attack, liveness };

    Kind kind = Kind::attack;
    std::string signature_id; // attack alerts only
    double confidence = 0.0;  // mean normalized score of the evidence set
    std::vector<std::string> stream_ids;
    std::int64_t t_begin_us = 0;
    std::int64_t t_end_us = 0;
    std::vector<SegmentHit> evidence; // one hit per segment index, in order

    bool operator==(const Alert&) const = default;
};

namespace detail {

inline constexpr Symbol kMaskedSymbol = 0xffffffffu;

/// All non-overlapping above-threshold hits of one segment in a symbol
/// region: iterated best-alignment with masking, highest score kept per
/// overlapping span. Spans and times come out absolute via `abs_base`.
inline std::vector<SegmentHit> scan_symbols(std::span<const Symbol> region,
                                            std::span<const std::int64_t> region_ts,
                                            std::uint64_t abs_base, const Segment& segment,
                                            const std::string& stream_id,
                                            const ScoringScheme& scheme, double tau) {
    std::vector<SegmentHit> hits;
    if (region.empty() || segment.symbols.empty()) return hits;

    // cheap reject: best score anywhere in the region below threshold
    Score best = sw_score(segment.symbols, region, scheme);
    if (normalized_vs_query(best, scheme, segment.symbols.size()) < tau) return hits;

    std::vector<Symbol> work(region.begin(), region.end());
    for (int iter = 0; iter < 256; ++iter) {
        AlignmentResult r = sw_align(segment.symbols, work, scheme);
        double norm = normalized_vs_query(r.score, scheme, segment.symbols.size());
        if (r.ops.empty() || norm < tau) break;

        bool overlaps_existing = false;
        for (const SegmentHit& h : hits) {
            std::uint64_t b = abs_base + r.b_begin, e = abs_base + r.b_end;
            if (b < h.span_end && h.span_begin < e) {
                overlaps_existing = true;
                break;
            }
        }
        if (!overlaps_existing) {
            SegmentHit hit;
            hit.segment_index = segment.index;
            hit.stream_id = stream_id;
            hit.raw_score = r.score;
            hit.normalized_vs_query = norm;
            hit.span_begin = abs_base + r.b_begin;
            hit.span_end = abs_base + r.b_end;
            hit.time_us = region_ts[r.b_end - 1];
            hits.push_back(std::move(hit));
        }
        for (std::size_t j = r.b_begin; j < r.b_end; ++j) work[j] = kMaskedSymbol;
    }
    std::sort(hits.begin(), hits.end(), [](const SegmentHit& x, const SegmentHit& y) {
        return x.span_begin < y.span_begin;
    });
    return hits;
}

} // namespace detail

/// Local alignment of the segment (query) against the stream's full window.
/// Hit spans are absolute symbol offsets; signature_id is left for the
/// caller to assign.
inline std::vector<SegmentHit> scan_window(const MonitoredStream& stream, const Segment& segment,
                                           const ScoringScheme& scheme, double tau) {
    std::vector<Symbol> syms;
    std::vector<std::int64_t> ts;
    stream.linearize(stream.size(), syms, ts);
    return detail::scan_symbols(syms, ts, stream.window_begin(), segment, stream.id(), scheme,
                                tau);
}

/// Folds one hit into the per-signature correlation state. Hits older than
/// the correlation window (relative to the new hit) expire first; when every
/// segment index is covered, one alert is emitted and the state resets.
inline std::optional<Alert> correlate(AttackState& state, const SegmentHit& hit,
                                      const DetectorConfig& cfg) {
    std::erase_if(state.hits, [&](const SegmentHit& h) {
        return h.time_us < hit.time_us - cfg.correlation_window_us;
    });
    state.hits.push_back(hit);

    std::fill(state.found.begin(), state.found.end(), false);
    for (const SegmentHit& h : state.hits)
        if (h.segment_index < state.found.size()) state.found[h.segment_index] = true;
    state.first_hit_us = state.hits.front().time_us;
    state.last_hit_us = state.hits.front().time_us;
    for (const SegmentHit& h : state.hits) {
        state.first_hit_us = std::min(state.first_hit_us, h.time_us);
        state.last_hit_us = std::max(state.last_hit_us, h.time_us);
    }

    if (std::find(state.found.begin(), state.found.end(), false) != state.found.end())
        return std::nullopt;

    // best hit per segment: highest score, then earliest, then stream id
    Alert alert;
    alert.kind = Alert::Kind::attack;
    alert.signature_id = state.signature_id;
    alert.evidence.resize(state.found.size());
    std::vector<bool> chosen(state.found.size(), false);
    for (const SegmentHit& h : state.hits) {
        if (h.segment_index >= state.found.size()) continue;
        SegmentHit& slot = alert.evidence[h.segment_index];
        bool better = !chosen[h.segment_index] ||
                      h.normalized_vs_query > slot.normalized_vs_query ||
                      (h.normalized_vs_query == slot.normalized_vs_query &&
                       std::tie(h.time_us, h.stream_id, h.span_begin) <
                           std::tie(slot.time_us, slot.stream_id, slot.span_begin));
        if (better) {
            slot = h;
            chosen[h.segment_index] = true;
        }
    }
    double sum = 0.0;
    alert.t_begin_us = alert.evidence.front().time_us;
    alert.t_end_us = alert.evidence.front().time_us;
    for (const SegmentHit& h : alert.evidence) {
        sum += h.normalized_vs_query;
        alert.t_begin_us = std::min(alert.t_begin_us, h.time_us);
        alert.t_end_us = std::max(alert.t_end_us, h.time_us);
        alert.stream_ids.push_back(h.stream_id);
    }
    alert.confidence = sum / static_cast<double>(alert.evidence.size());
    std::sort(alert.stream_ids.begin(), alert.stream_ids.end());
    alert.stream_ids.erase(std::unique(alert.stream_ids.begin(), alert.stream_ids.end()),
                           alert.stream_ids.end());

    state.hits.clear();
    std::fill(state.found.begin(), state.found.end(), false);
    return alert;
}

/// Correlation engine over any number of registered streams. Unknown calls
/// map to a reserved OTHER symbol (one past the frozen alphabet) that never
/// matches signature content. Event ingestion doubles as a liveness proof.
/// The effective threshold per signature is max(cfg.tau, default_threshold),
/// so a hit always satisfies the signature's own operating point.
class DetectionEngine {
public:
    DetectionEngine(Alphabet alphabet, const std::vector<Signature>& signatures,
                    DetectorConfig cfg = {})
        : cfg_(cfg), alphabet_(std::move(alphabet)) {
        cfg_.validate();
        alphabet_.freeze();
        for (const Signature& sig : signatures) {
            if (!sig.alphabet_ref.empty() && sig.alphabet_ref != alphabet_.id())
                throw Error(Errc::alphabet_mismatch,
                            "signature '" + sig.attack_id + "' bound to alphabet " +
                                sig.alphabet_ref + ", engine has " + alphabet_.id());
            SigRuntime rt;
            rt.sig = sig;
            rt.state = AttackState(sig.attack_id, sig.segments.size());
            rt.tau = std::max(cfg_.tau, sig.default_threshold);
            sigs_.emplace(sig.attack_id, std::move(rt));
        }
    }

    void register_stream(const std::string& id, std::int64_t now_us = 0) {
        streams_.try_emplace(id, MonitoredStream(id, cfg_.window_capacity, now_us));
    }

    bool has_stream(const std::string& id) const { return streams_.count(id) != 0; }

    const MonitoredStream& stream(const std::string& id) const {
        auto it = streams_.find(id);
        if (it == streams_.end()) throw Error(Errc::unknown_stream, "unknown stream '" + id + "'");
        return it->second;
    }

    const Alphabet& alphabet() const { return alphabet_; }
    Symbol other_symbol() const { return static_cast<Symbol>(alphabet_.size()); }

    std::vector<Alert> process_event(const CallEvent& ev) {
        auto it = streams_.find(ev.stream_id);
        if (it == streams_.end())
            throw Error(Errc::unknown_stream, "unknown stream '" + ev.stream_id + "'");
        MonitoredStream& st = it->second;

        Symbol sym = alphabet_.find(ev.kind, ev.name).value_or(other_symbol());
        st.push(sym, ev.timestamp_us);
        st.last_heartbeat_us = ev.timestamp_us;
        st.liveness_alerted = false;

        auto& pending = pending_scan_[ev.stream_id];
        if (++pending >= cfg_.rescan_stride) {
            pending = 0;
            return scan_stream(st);
        }
        return {};
    }

    void heartbeat(const std::string& id, std::int64_t now_us) {
        auto it = streams_.find(id);
        if (it == streams_.end()) throw Error(Errc::unknown_stream, "unknown stream '" + id + "'");
        it->second.last_heartbeat_us = now_us;
        it->second.liveness_alerted = false;
    }

    /// One liveness alert per silent stream, suppressed until it beats again.
    std::vector<Alert> check_liveness(std::int64_t now_us) {
        std::vector<Alert> alerts;
        const std::int64_t limit =
            cfg_.heartbeat_period_us * static_cast<std::int64_t>(cfg_.heartbeat_misses);
        for (auto& [id, st] : streams_) {
            if (st.liveness_alerted) continue;
            if (now_us - st.last_heartbeat_us > limit) {
                Alert a;
                a.kind = Alert::Kind::liveness;
                a.stream_ids = {id};
                a.t_begin_us = st.last_heartbeat_us;
                a.t_end_us = now_us;
                alerts.push_back(std::move(a));
                st.liveness_alerted = true;
            }
        }
        return alerts;
    }

    /// On-demand scan of every stream; run after the last event so tails
    /// shorter than the rescan stride are still inspected.
    std::vector<Alert> flush() {
        std::vector<Alert> alerts;
        for (auto& [id, st] : streams_) {
            auto batch = scan_stream(st);
            alerts.insert(alerts.end(), batch.begin(), batch.end());
            pending_scan_[id] = 0;
        }
        return alerts;
    }

private:
    struct Occurrence {
        std::uint64_t begin = 0, end = 0;
        Score raw = 0;
        bool consumed = false;
    };

    struct SigRuntime {
        Signature sig;
        AttackState state;
        double tau = 0.8;
        std::map<std::pair<std::uint32_t, std::string>, Occurrence> occurrences;
    };

    /// Scans recent window content for every signature segment. The region
    /// (stride + 2x segment length) overlaps the previous scan point, so
    /// occurrences straddling scans are still seen; full-window work is
    /// left to scan_window callers.
    std::vector<Alert> scan_stream(MonitoredStream& st) {
        std::vector<Alert> alerts;
        std::vector<Symbol> syms;
        std::vector<std::int64_t> ts;
        for (auto& [sig_id, rt] : sigs_) {
            for (const Segment& seg : rt.sig.segments) {
                std::size_t region =
                    std::min<std::size_t>(st.size(),
                                          cfg_.rescan_stride + 2 * seg.symbols.size() + 8);
                st.linearize(region, syms, ts);
                std::uint64_t abs_base = st.cursor() - syms.size();
                auto hits = detail::scan_symbols(syms, ts, abs_base, seg, st.id(),
                                                 rt.sig.scheme, rt.tau);
                for (SegmentHit& hit : hits) {
                    hit.signature_id = sig_id;
                    if (!accept_hit(rt, hit)) continue;
                    if (auto alert = correlate(rt.state, hit, cfg_)) {
                        mark_consumed(*alert);
                        alerts.push_back(std::move(*alert));
                    }
                }
            }
        }
        return alerts;
    }

    /// Occurrence-level dedup: repeated scans of the same window span feed
    /// correlation once; a grown span (higher score) upgrades the stored
    /// hit; spans already consumed by an alert stay silent.
    bool accept_hit(SigRuntime& rt, const SegmentHit& hit) {
        auto key = std::make_pair(hit.segment_index, hit.stream_id);
        auto it = rt.occurrences.find(key);
        if (it != rt.occurrences.end()) {
            Occurrence& occ = it->second;
            if (hit.span_begin < occ.end && occ.begin < hit.span_end) {
                if (occ.consumed || hit.raw_score <= occ.raw) return false;
                occ.begin = hit.span_begin;
                occ.end = hit.span_end;
                occ.raw = hit.raw_score;
                std::erase_if(rt.state.hits, [&](const SegmentHit& h) {
                    return h.segment_index == hit.segment_index &&
                           h.stream_id == hit.stream_id && h.span_begin < hit.span_end &&
                           hit.span_begin < h.span_end;
                });
                return true;
            }
        }
        rt.occurrences[key] = {hit.span_begin, hit.span_end, hit.raw_score, false};
        return true;
    }

    void mark_consumed(const Alert& alert) {
        auto& rt = sigs_.at(alert.signature_id);
        for (const SegmentHit& h : alert.evidence) {
            auto it = rt.occurrences.find({h.segment_index, h.stream_id});
            if (it != rt.occurrences.end() && h.span_begin < it->second.end &&
                it->second.begin < h.span_end)
                it->second.consumed = true;
        }
    }

    DetectorConfig cfg_;
    Alphabet alphabet_;
    std::map<std::string, SigRuntime> sigs_;
    std::map<std::string, MonitoredStream> streams_;
    std::map<std::string, std::uint32_t> pending_scan_;
};

inline std::string format_alert_record(const Alert& a) {
    if (a.kind == Alert::Kind::liveness) {
        return "liveness " + a.stream_ids.at(0) + " " + std::to_string(a.t_begin_us) + " " +
               std::to_string(a.t_end_us);
    }
    std::string out = "attack " + a.signature_id + " " + format_fixed4(a.confidence) + " " +
                      std::to_string(a.t_begin_us) + " " + std::to_string(a.t_end_us) + " ";
    for (std::size_t i = 0; i < a.stream_ids.size(); ++i) {
        if (i) out += ',';
        out += a.stream_ids[i];
    }
    for (const SegmentHit& h : a.evidence) {
        out += ' ';
        out += std::to_string(h.segment_index) + ":" + h.stream_id + ":" +
               std::to_string(h.span_begin) + ":" + std::to_string(h.span_end) + ":" +
               std::to_string(h.time_us) + ":" + std::to_string(h.raw_score) + ":" +
               format_fixed4(h.normalized_vs_query);
    }
    return out;
}

inline Alert parse_alert_record(std::string_view line, std::size_t lineno = 0) {
    auto fields = split_ws(line);
    if (fields.empty()) throw Error(Errc::corrupt_entry, "empty alert record", lineno);
    Alert a;
    if (fields[0] == "liveness") {
        if (fields.size() != 4)
            throw Error(Errc::corrupt_entry, "liveness record needs 4 fields", lineno);
        a.kind = Alert::Kind::liveness;
        a.stream_ids = {std::string(fields[1])};
        a.t_begin_us =
            parse_int<std::int64_t>(fields[2], Errc::corrupt_entry, lineno, "liveness since");
        a.t_end_us =
            parse_int<std::int64_t>(fields[3], Errc::corrupt_entry, lineno, "liveness time");
        return a;
    }
    if (fields[0] != "attack")
        throw Error(Errc::corrupt_entry, "unknown alert kind '" + std::string(fields[0]) + "'",
                    lineno);
    if (fields.size() < 7)
        throw Error(Errc::corrupt_entry, "attack record needs at least 7 fields", lineno);
    a.kind = Alert::Kind::attack;
    a.signature_id = std::string(fields[1]);
    a.confidence = parse_double(fields[2], Errc::corrupt_entry, lineno, "confidence");
    a.t_begin_us = parse_int<std::int64_t>(fields[3], Errc::corrupt_entry, lineno, "span start");
    a.t_end_us = parse_int<std::int64_t>(fields[4], Errc::corrupt_entry, lineno, "span end");
    for (auto part : split_char(fields[5], ','))
        if (!part.empty()) a.stream_ids.emplace_back(part);
    for (std::size_t i = 6; i < fields.size(); ++i) {
        auto ev = split_char(fields[i], ':');
        if (ev.size() != 7)
            throw Error(Errc::corrupt_entry, "evidence needs 7 ':'-fields", lineno);
        SegmentHit h;
        h.signature_id = a.signature_id;
        h.segment_index =
            parse_int<std::uint32_t>(ev[0], Errc::corrupt_entry, lineno, "segment index");
        h.stream_id = std::string(ev[1]);
        h.span_begin =
            parse_int<std::uint64_t>(ev[2], Errc::corrupt_entry, lineno, "span begin");
        h.span_end = parse_int<std::uint64_t>(ev[3], Errc::corrupt_entry, lineno, "span end");
        h.time_us = parse_int<std::int64_t>(ev[4], Errc::corrupt_entry, lineno, "hit time");
        h.raw_score = parse_int<Score>(ev[5], Errc::corrupt_entry, lineno, "raw score");
        h.normalized_vs_query = parse_double(ev[6], Errc::corrupt_entry, lineno, "hit score");
        a.evidence.push_back(std::move(h));
    }
    return a;
}

} // namespace madcrow
