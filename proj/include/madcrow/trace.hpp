/*
 * Copyright (c) 2026 the madcrow authors
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "madcrow/error.hpp"
#include "madcrow/util.hpp"

namespace madcrow {

enum class CallKind : std::uint8_t { hypercall, syscall };

using Symbol = std::uint32_t;

/// Stream id of the privileged control domain; the only stream that may
/// carry syscall events under the default policy.
inline constexpr std::string_view kPrivilegedStream = "dom0";

inline char kind_tag(CallKind k) { return k == CallKind::hypercall ? 'H' : 'S'; }

struct CallEvent {
    std::int64_t timestamp_us = 0;
    std::string stream_id;
    CallKind kind = CallKind::hypercall;
    std::string name;
    std::optional<std::string> args;           // raw argument text, when present
    std::optional<std::uint64_t> arg_digest;   // fnv-1a of args

    bool operator==(const CallEvent&) const = default;
};

struct TracePolicy {
    bool allow_guest_syscalls = false;
};

/// Enforces the event invariants: non-negative timestamp, well-formed name,
/// and the syscall-only-on-dom0 rule (unless the policy relaxes it).
inline void validate_event(const CallEvent& ev, const TracePolicy& policy = {}) {
    if (ev.timestamp_us < 0)
        throw Error(Errc::invalid_argument, "negative timestamp");
    if (ev.name.empty() || ev.name.find_first_of(" \t") != std::string::npos)
        throw Error(Errc::invalid_argument, "bad call name: '" + ev.name + "'");
    if (ev.kind == CallKind::syscall && !policy.allow_guest_syscalls &&
        ev.stream_id != kPrivilegedStream)
        throw Error(Errc::policy_violation,
                    "syscall event on non-privileged stream '" + ev.stream_id + "'");
}

/// Bijection (kind, name) -> dense symbol. Unfrozen alphabets extend on
/// first sight; frozen ones reject unknown calls.
class Alphabet {
public:
    Symbol encode(CallKind kind, std::string_view name) {
        auto it = index_.find(key(kind, name));
        if (it != index_.end()) return it->second;
        if (frozen_)
            throw Error(Errc::unknown_call,
                        "unknown call '" + std::string(name) + "' in frozen alphabet");
        Symbol sym = static_cast<Symbol>(entries_.size());
        entries_.emplace_back(kind, std::string(name));
        index_.emplace(key(kind, name), sym);
        return sym;
    }

    std::optional<Symbol> find(CallKind kind, std::string_view name) const {
        auto it = index_.find(key(kind, name));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    const std::pair<CallKind, std::string>& at(Symbol sym) const {
        if (sym >= entries_.size())
            throw Error(Errc::unknown_call, "symbol " + std::to_string(sym) + " out of range");
        return entries_[sym];
    }

    std::size_t size() const { return entries_.size(); }
    bool frozen() const { return frozen_; }
    void freeze() { frozen_ = true; }

    /// Content hash of the mapping; the version identifier signatures and
    /// databases bind to.
    std::string id() const { return to_hex16(fnv1a64(body_text())); }

    std::string to_text() const { return "madcrow-alphabet v1\n" + body_text(); }

    static Alphabet from_text(std::string_view text) {
        auto lines = split_lines(text);
        if (lines.empty() || lines[0] != "madcrow-alphabet v1")
            throw Error(Errc::version_error, "bad alphabet header", 1);
        Alphabet a;
        for (std::size_t i = 1; i < lines.size(); ++i) {
            std::size_t lineno = i + 1;
            auto fields = split_char(lines[i], '\t');
            if (fields.size() != 3)
                throw Error(Errc::corrupt_entry, "expected symbol<TAB>kind<TAB>name", lineno);
            auto sym = parse_int<Symbol>(fields[0], Errc::corrupt_entry, lineno, "symbol");
            if (sym != a.entries_.size())
                throw Error(Errc::corrupt_entry, "non-dense symbol numbering", lineno);
            CallKind kind;
            if (fields[1] == "H")
                kind = CallKind::hypercall;
            else if (fields[1] == "S")
                kind = CallKind::syscall;
            else
                throw Error(Errc::corrupt_entry, "bad kind tag", lineno);
            if (fields[2].empty())
                throw Error(Errc::corrupt_entry, "empty name", lineno);
            if (a.find(kind, fields[2]))
                throw Error(Errc::corrupt_entry, "duplicate (kind, name)", lineno);
            a.encode(kind, fields[2]);
        }
        return a;
    }

private:
    static std::string key(CallKind kind, std::string_view name) {
        std::string k(1, kind_tag(kind));
        k += ':';
        k += name;
        return k;
    }

    std::string body_text() const {
        std::string out;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            out += std::to_string(i);
            out += '\t';
            out += kind_tag(entries_[i].first);
            out += '\t';
            out += entries_[i].second;
            out += '\n';
        }
        return out;
    }

    std::vector<std::pair<CallKind, std::string>> entries_;
    std::unordered_map<std::string, Symbol> index_;
    bool frozen_ = false;
};

/// One VM's encoded call stream; the unit of analysis everywhere downstream.
struct CallSequence {
    std::string stream_id;
    std::vector<Symbol> symbols;
    std::vector<std::int64_t> timestamps_us;

    bool operator==(const CallSequence&) const = default;
};

inline Symbol encode_event(const CallEvent& ev, Alphabet& alphabet) {
    return alphabet.encode(ev.kind, ev.name);
}

inline CallSequence build_sequence(std::span<const CallEvent> events, Alphabet& alphabet) {
    CallSequence seq;
    if (events.empty()) return seq;
    seq.stream_id = events.front().stream_id;
    seq.symbols.reserve(events.size());
    seq.timestamps_us.reserve(events.size());
    std::int64_t prev_ts = events.front().timestamp_us;
    for (const CallEvent& ev : events) {
        if (ev.stream_id != seq.stream_id)
            throw Error(Errc::mixed_streams, "events from streams '" + seq.stream_id +
                                                 "' and '" + ev.stream_id + "'");
        if (ev.timestamp_us < prev_ts)
            throw Error(Errc::unsorted_input, "timestamps decrease at t=" +
                                                  std::to_string(ev.timestamp_us));
        prev_ts = ev.timestamp_us;
        seq.symbols.push_back(encode_event(ev, alphabet));
        seq.timestamps_us.push_back(ev.timestamp_us);
    }
    return seq;
}

/// Inverse of build_sequence: symbols back to events via the alphabet.
inline std::vector<CallEvent> decode_sequence(const CallSequence& seq, const Alphabet& alphabet) {
    std::vector<CallEvent> events;
    events.reserve(seq.symbols.size());
    for (std::size_t i = 0; i < seq.symbols.size(); ++i) {
        const auto& [kind, name] = alphabet.at(seq.symbols[i]);
        CallEvent ev;
        ev.timestamp_us = seq.timestamps_us[i];
        ev.stream_id = seq.stream_id;
        ev.kind = kind;
        ev.name = name;
        events.push_back(std::move(ev));
    }
    return events;
}

/// Parses one canonical trace line `timestamp stream kind name[(args)]`.
/// Comment ('#') and blank lines yield nullopt. Malformed lines throw a
/// parse error whose position() is the 1-based column of the bad field.
inline std::optional<CallEvent> parse_trace_line(std::string_view line) {
    std::size_t i = 0;
    auto skip_ws = [&] {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    };
    auto token = [&](std::string_view what) {
        skip_ws();
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i == start)
            throw Error(Errc::parse_error, "missing " + std::string(what), start + 1);
        return std::pair<std::string_view, std::size_t>{line.substr(start, i - start),
                                                        start + 1};
    };

    skip_ws();
    if (i == line.size() || line[i] == '#') return std::nullopt;

    CallEvent ev;
    auto [ts_tok, ts_col] = token("timestamp");
    ev.timestamp_us = parse_int<std::int64_t>(ts_tok, Errc::parse_error, ts_col, "timestamp");
    if (ev.timestamp_us < 0)
        throw Error(Errc::parse_error, "negative timestamp", ts_col);

    auto [stream_tok, stream_col] = token("stream id");
    (void)stream_col;
    ev.stream_id = std::string(stream_tok);

    auto [kind_tok, kind_col] = token("kind tag");
    if (kind_tok == "H")
        ev.kind = CallKind::hypercall;
    else if (kind_tok == "S")
        ev.kind = CallKind::syscall;
    else
        throw Error(Errc::parse_error, "kind must be H or S, got '" + std::string(kind_tok) + "'",
                    kind_col);

    skip_ws();
    std::size_t call_col = i + 1;
    if (i == line.size())
        throw Error(Errc::parse_error, "missing call name", call_col);
    std::string_view rest = line.substr(i);
    while (!rest.empty() && (rest.back() == ' ' || rest.back() == '\t')) rest.remove_suffix(1);

    std::size_t paren = rest.find('(');
    if (paren == std::string_view::npos) {
        if (rest.find_first_of(" \t") != std::string_view::npos)
            throw Error(Errc::parse_error, "whitespace in call name", call_col);
        ev.name = std::string(rest);
    } else {
        if (rest.back() != ')')
            throw Error(Errc::parse_error, "unterminated argument list", call_col + paren);
        std::string_view name = rest.substr(0, paren);
        if (name.empty() || name.find_first_of(" \t") != std::string_view::npos)
            throw Error(Errc::parse_error, "bad call name before '('", call_col);
        ev.name = std::string(name);
        std::string_view args = rest.substr(paren + 1, rest.size() - paren - 2);
        ev.args = std::string(args);
        ev.arg_digest = fnv1a64(args);
    }
    return ev;
}

inline std::string format_trace_line(const CallEvent& ev) {
    std::string out = std::to_string(ev.timestamp_us);
    out += ' ';
    out += ev.stream_id;
    out += ' ';
    out += kind_tag(ev.kind);
    out += ' ';
    out += ev.name;
    if (ev.args) {
        out += '(';
        out += *ev.args;
        out += ')';
    }
    return out;
}

/// Parses a whole trace file, skipping comments and blank lines. Parse
/// errors are rethrown with the line number prepended to the message.
inline std::vector<CallEvent> parse_trace_text(std::string_view text) {
    std::vector<CallEvent> events;
    auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        try {
            if (auto ev = parse_trace_line(lines[i])) events.push_back(std::move(*ev));
        } catch (const Error& e) {
            throw Error(e.code(),
                        "line " + std::to_string(i + 1) + ", column " +
                            std::to_string(e.position()) + ": " + e.what(),
                        i + 1);
        }
    }
    return events;
}

inline std::string format_trace_text(std::span<const CallEvent> events) {
    std::string out;
    for (const CallEvent& ev : events) {
        out += format_trace_line(ev);
        out += '\n';
    }
    return out;
}

} // namespace madcrow
