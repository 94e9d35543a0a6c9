/*
 * Copyright (c) 2026 the madcrow authors
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "madcrow/detect.hpp"
#include "madcrow/error.hpp"
#include "madcrow/signature.hpp"
#include "madcrow/util.hpp"

namespace madcrow {

inline constexpr std::string_view kSignatureHeader = "madcrow-signature v1";
inline constexpr std::string_view kAlertHeader = "madcrow-alerts v1";

/// Parses one `attack .. end` record starting at lines[pos]; advances pos
/// past the record. Line numbers are 1-based into the original file.
inline Signature parse_signature_record(const std::vector<std::string_view>& lines,
                                        std::size_t& pos) {
    auto need = [&](std::size_t i) -> std::string_view {
        if (i >= lines.size())
            throw Error(Errc::corrupt_entry, "truncated signature record", lines.size());
        return lines[i];
    };
    Signature sig;
    {
        auto f = split_ws(need(pos));
        if (f.size() != 2 || f[0] != "attack")
            throw Error(Errc::corrupt_entry, "expected 'attack <id>'", pos + 1);
        sig.attack_id = std::string(f[1]);
        ++pos;
    }
    {
        auto f = split_ws(need(pos));
        if (f.size() != 4 || f[0] != "scheme")
            throw Error(Errc::corrupt_entry, "expected 'scheme <match> <mismatch> <gap>'",
                        pos + 1);
        sig.scheme.match = parse_int<Score>(f[1], Errc::corrupt_entry, pos + 1, "match score");
        sig.scheme.mismatch =
            parse_int<Score>(f[2], Errc::corrupt_entry, pos + 1, "mismatch penalty");
        sig.scheme.gap = parse_int<Score>(f[3], Errc::corrupt_entry, pos + 1, "gap penalty");
        ++pos;
    }
    {
        auto f = split_ws(need(pos));
        if (f.size() != 2 || f[0] != "threshold")
            throw Error(Errc::corrupt_entry, "expected 'threshold <value>'", pos + 1);
        sig.default_threshold = parse_double(f[1], Errc::corrupt_entry, pos + 1, "threshold");
        ++pos;
    }
    {
        auto f = split_ws(need(pos));
        if (f.size() != 3 || f[0] != "provenance")
            throw Error(Errc::corrupt_entry, "expected 'provenance <traces> <rounds>'", pos + 1);
        sig.provenance.trace_count =
            parse_int<std::uint32_t>(f[1], Errc::corrupt_entry, pos + 1, "trace count");
        sig.provenance.rounds =
            parse_int<std::uint32_t>(f[2], Errc::corrupt_entry, pos + 1, "round count");
        ++pos;
    }
    while (true) {
        auto line = need(pos);
        if (line == "end") {
            ++pos;
            break;
        }
        auto f = split_ws(line);
        if (f.size() < 2 || f[0] != "segment")
            throw Error(Errc::corrupt_entry, "expected 'segment <index> <symbols...>' or 'end'",
                        pos + 1);
        Segment seg;
        seg.index = parse_int<std::uint32_t>(f[1], Errc::corrupt_entry, pos + 1, "segment index");
        if (seg.index != sig.segments.size())
            throw Error(Errc::corrupt_entry, "segment indices must be dense and ordered",
                        pos + 1);
        for (std::size_t i = 2; i < f.size(); ++i)
            seg.symbols.push_back(parse_int<Symbol>(f[i], Errc::corrupt_entry, pos + 1, "symbol"));
        if (seg.symbols.empty())
            throw Error(Errc::corrupt_entry, "empty segment", pos + 1);
        sig.segments.push_back(std::move(seg));
    }
    if (sig.segments.empty())
        throw Error(Errc::corrupt_entry, "signature without segments", pos);
    return sig;
}

/// The audit component's signature database: a versioned text file bound to
/// one alphabet version, holding any number of signature records. Saves are
/// atomic whole-file rewrites.
class SignatureDb {
public:
    static SignatureDb create(std::filesystem::path path, std::string alphabet_ref) {
        SignatureDb db;
        db.path_ = std::move(path);
        db.alphabet_ref_ = std::move(alphabet_ref);
        db.flush();
        return db;
    }

    static SignatureDb load(const std::filesystem::path& path) {
        if (!std::filesystem::exists(path))
            throw Error(Errc::storage_error, "no signature db at " + path.string());
        SignatureDb db;
        db.path_ = path;
        std::string text = read_file(path);
        auto lines = split_lines(text);
        if (lines.empty() || lines[0] != kSignatureHeader)
            throw Error(Errc::version_error, "bad signature db header", 1);
        if (lines.size() < 2)
            throw Error(Errc::corrupt_entry, "missing alphabet binding", 2);
        auto f = split_ws(lines[1]);
        if (f.size() != 2 || f[0] != "alphabet")
            throw Error(Errc::corrupt_entry, "expected 'alphabet <id>'", 2);
        db.alphabet_ref_ = std::string(f[1]);
        std::size_t pos = 2;
        while (pos < lines.size()) {
            Signature sig = parse_signature_record(lines, pos);
            sig.alphabet_ref = db.alphabet_ref_;
            if (db.entries_.count(sig.attack_id))
                throw Error(Errc::corrupt_entry, "duplicate signature id " + sig.attack_id, pos);
            db.entries_.emplace(sig.attack_id, std::move(sig));
        }
        return db;
    }

    void save(const Signature& sig) {
        if (entries_.count(sig.attack_id))
            throw Error(Errc::duplicate_id, "signature '" + sig.attack_id + "' already stored");
        if (sig.segments.empty())
            throw Error(Errc::invalid_argument, "refusing to store an empty signature");
        if (!sig.alphabet_ref.empty() && sig.alphabet_ref != alphabet_ref_)
            throw Error(Errc::alphabet_mismatch, "signature bound to alphabet " +
                                                     sig.alphabet_ref + ", db bound to " +
                                                     alphabet_ref_);
        entries_.emplace(sig.attack_id, sig);
        flush();
    }

    /// Re-binds the db to an extended alphabet. Valid only for append-only
    /// extensions, which preserve every stored symbol.
    void rebind_alphabet(std::string new_ref) {
        alphabet_ref_ = std::move(new_ref);
        for (auto& [id, sig] : entries_) sig.alphabet_ref = alphabet_ref_;
        flush();
    }

    const std::map<std::string, Signature>& entries() const { return entries_; }
    const std::string& alphabet_ref() const { return alphabet_ref_; }
    const std::filesystem::path& path() const { return path_; }

    std::string to_text() const {
        std::string out(kSignatureHeader);
        out += "\nalphabet " + alphabet_ref_ + "\n";
        for (const auto& [id, sig] : entries_) out += format_signature_record(sig);
        return out;
    }

private:
    void flush() const { write_file_atomic(path_, to_text()); }

    std::filesystem::path path_;
    std::string alphabet_ref_;
    std::map<std::string, Signature> entries_;
};

inline SignatureDb load_signatures(const std::filesystem::path& path) {
    return SignatureDb::load(path);
}

inline void save_signature(SignatureDb& db, const Signature& sig) { db.save(sig); }

/// Append-only alert log. Existing bytes are never rewritten; records go
/// through the versioned one-line format from the detection module.
class AlertLog {
public:
    static AlertLog open(const std::filesystem::path& path) {
        AlertLog log;
        log.path_ = path;
        if (!std::filesystem::exists(path)) {
            std::ofstream out(path, std::ios::binary);
            if (!out) throw Error(Errc::storage_error, "cannot create " + path.string());
            out << kAlertHeader << '\n';
        } else {
            std::string text = read_file(path);
            auto lines = split_lines(text);
            if (lines.empty() || lines[0] != kAlertHeader)
                throw Error(Errc::version_error, "bad alert log header", 1);
        }
        return log;
    }

    void append(const Alert& alert) {
        std::ofstream out(path_, std::ios::binary | std::ios::app);
        if (!out) throw Error(Errc::storage_error, "cannot append to " + path_.string());
        out << format_alert_record(alert) << '\n';
        if (!out) throw Error(Errc::storage_error, "short append to " + path_.string());
    }

    struct Filter {
        std::optional<Alert::Kind> kind;
        std::optional<std::string> signature_id;
        std::optional<std::pair<std::int64_t, std::int64_t>> time_range; // inclusive overlap
    };

    std::vector<Alert> list(const Filter& filter = {}) const {
        std::string text = read_file(path_);
        auto lines = split_lines(text);
        if (lines.empty() || lines[0] != kAlertHeader)
            throw Error(Errc::version_error, "bad alert log header", 1);
        std::vector<Alert> out;
        for (std::size_t i = 1; i < lines.size(); ++i) {
            if (lines[i].empty()) continue;
            Alert a = parse_alert_record(lines[i], i + 1);
            if (filter.kind && a.kind != *filter.kind) continue;
            if (filter.signature_id && a.signature_id != *filter.signature_id) continue;
            if (filter.time_range &&
                (a.t_end_us < filter.time_range->first || a.t_begin_us > filter.time_range->second))
                continue;
            out.push_back(std::move(a));
        }
        return out;
    }

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline void append_alert(AlertLog& log, const Alert& alert) { log.append(alert); }

inline std::vector<Alert> list_alerts(const AlertLog& log, const AlertLog::Filter& filter = {}) {
    return log.list(filter);
}

} // namespace madcrow
