/*
 * Copyright (c) 2026 the madcrow authors
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "madcrow/bench.hpp"
#include "madcrow/detect.hpp"
#include "madcrow/error.hpp"
#include "madcrow/signature.hpp"
#include "madcrow/simulate.hpp"
#include "madcrow/store.hpp"
#include "madcrow/trace.hpp"
#include "madcrow/util.hpp"

namespace madcrow::cli {

namespace fs = std::filesystem;

// exit codes: 0 clean, 1 alerts raised, 2 error
inline constexpr int kExitClean = 0;
inline constexpr int kExitAlerts = 1;
inline constexpr int kExitError = 2;

struct CommonOpts {
    std::string db_path;
    std::string alphabet_path;
    bool allow_guest_syscalls = false;

    fs::path alphabet_file() const {
        return alphabet_path.empty() ? fs::path(db_path + ".alphabet") : fs::path(alphabet_path);
    }
};

inline std::vector<CallEvent> load_trace_file(const fs::path& path, const TracePolicy& policy) {
    std::vector<CallEvent> events;
    try {
        events = parse_trace_text(read_file(path));
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what(), e.position());
    }
    for (const CallEvent& ev : events) validate_event(ev, policy);
    return events;
}

inline int cmd_sign(const CommonOpts& common, const std::string& attack_id,
                    const std::vector<std::string>& trace_files, const ScoringScheme& scheme,
                    const DistillParams& params, std::ostream& out, std::ostream& err) {
    if (trace_files.size() < 2) {
        err << "sign: need at least two traces\n";
        return kExitError;
    }
    TracePolicy policy{common.allow_guest_syscalls};

    Alphabet alphabet;
    std::string old_id;
    const fs::path alphabet_path = common.alphabet_file();
    if (fs::exists(alphabet_path)) {
        alphabet = Alphabet::from_text(read_file(alphabet_path));
        old_id = alphabet.id();
    }

    AttackTraceSet traces;
    traces.attack_id = attack_id;
    for (const std::string& file : trace_files) {
        std::vector<CallEvent> events = load_trace_file(file, policy);
        traces.sequences.push_back(build_sequence(events, alphabet));
    }
    write_file_atomic(alphabet_path, alphabet.to_text());
    traces.alphabet_ref = alphabet.id();

    SignatureDb db = fs::exists(common.db_path) ? SignatureDb::load(common.db_path)
                                                : SignatureDb::create(common.db_path,
                                                                      traces.alphabet_ref);
    if (db.alphabet_ref() != traces.alphabet_ref) {
        if (db.alphabet_ref() == old_id)
            db.rebind_alphabet(traces.alphabet_ref); // append-only extension
        else
            throw Error(Errc::alphabet_mismatch,
                        "db is bound to alphabet " + db.alphabet_ref() +
                            ", traces encode as " + traces.alphabet_ref);
    }

    Signature sig = distill(traces, scheme, params);
    db.save(sig);

    out << "signature " << sig.attack_id << ": " << sig.segments.size() << " segment(s), lengths [";
    for (std::size_t i = 0; i < sig.segments.size(); ++i) {
        if (i) out << ",";
        out << sig.segments[i].symbols.size();
    }
    out << "], threshold " << format_fixed4(sig.default_threshold) << ", traces "
        << sig.provenance.trace_count << ", rounds " << sig.provenance.rounds << "\n";
    return kExitClean;
}

inline int cmd_detect(const CommonOpts& common, const std::string& alerts_path,
                      const std::vector<std::string>& trace_files, const DetectorConfig& cfg,
                      std::ostream& out, std::ostream& err) {
    (void)err;
    TracePolicy policy{common.allow_guest_syscalls};
    SignatureDb db = SignatureDb::load(common.db_path);
    Alphabet alphabet = Alphabet::from_text(read_file(common.alphabet_file()));
    if (alphabet.id() != db.alphabet_ref())
        throw Error(Errc::alphabet_mismatch, "alphabet " + alphabet.id() +
                                                 " does not match db binding " +
                                                 db.alphabet_ref());

    std::vector<CallEvent> merged;
    for (const std::string& file : trace_files) {
        std::vector<CallEvent> events = load_trace_file(file, policy);
        merged.insert(merged.end(), events.begin(), events.end());
    }
    // timestamp order; file order (then line order) breaks ties
    std::stable_sort(merged.begin(), merged.end(),
                     [](const CallEvent& a, const CallEvent& b) {
                         return a.timestamp_us < b.timestamp_us;
                     });

    std::vector<Signature> sigs;
    for (const auto& [id, sig] : db.entries()) sigs.push_back(sig);
    DetectionEngine engine(std::move(alphabet), sigs, cfg);

    std::map<std::string, std::int64_t> first_seen;
    for (const CallEvent& ev : merged)
        if (!first_seen.count(ev.stream_id)) first_seen[ev.stream_id] = ev.timestamp_us;
    for (const auto& [id, t0] : first_seen) engine.register_stream(id, t0);

    AlertLog log = AlertLog::open(alerts_path);
    std::size_t alert_count = 0;
    auto emit = [&](std::vector<Alert> alerts) {
        for (const Alert& a : alerts) {
            log.append(a);
            out << format_alert_record(a) << "\n";
            ++alert_count;
        }
    };
    for (const CallEvent& ev : merged) {
        emit(engine.process_event(ev));
        emit(engine.check_liveness(ev.timestamp_us));
    }
    emit(engine.flush());
    if (!merged.empty()) emit(engine.check_liveness(merged.back().timestamp_us));

    return alert_count > 0 ? kExitAlerts : kExitClean;
}

inline int cmd_simulate(const std::string& scenario_name, std::uint64_t seed,
                        const ScenarioParams& params, const fs::path& out_dir,
                        std::ostream& out) {
    ScenarioOutput sc = scenario(scenario_name, params, seed);
    fs::create_directories(out_dir);

    const fs::path alphabet_path = out_dir / "alphabet";
    write_file_atomic(alphabet_path, sc.alphabet.to_text());
    out << alphabet_path.string() << "\n";

    for (std::size_t i = 0; i < sc.signing.sequences.size(); ++i) {
        fs::path p = out_dir / (sc.attack_id + ".sign" + std::to_string(i) + ".trace");
        write_file_atomic(p, format_trace_text(decode_sequence(sc.signing.sequences[i],
                                                               sc.alphabet)));
        out << p.string() << "\n";
    }
    for (const CallSequence& stream : sc.eval_streams) {
        fs::path p = out_dir / (sc.attack_id + "." + stream.stream_id + ".trace");
        write_file_atomic(p, format_trace_text(decode_sequence(stream, sc.alphabet)));
        out << p.string() << "\n";
    }
    fs::path truth_path = out_dir / (sc.attack_id + ".truth");
    write_file_atomic(truth_path, format_truth(sc.truth));
    out << truth_path.string() << "\n";
    return kExitClean;
}

inline int cmd_bench(const std::vector<std::size_t>& lengths,
                     const std::vector<unsigned>& lanes, int iters, bool verify,
                     std::ostream& out) {
    auto rows = run_alignment_bench(lengths, lanes, iters, verify);
    if (verify) out << "verification: wavefront == scalar on all benched inputs\n";
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-10s %8s %6s %14s %9s", "kernel", "length", "lanes",
                  "cells/s", "speedup");
    out << buf << "\n";
    for (const BenchRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%-10s %8zu %6s %14.3e %9.2f", r.kernel.c_str(),
                      r.length, r.lanes ? std::to_string(r.lanes).c_str() : "-",
                      r.cells_per_second, r.speedup_vs_scalar);
        out << buf << "\n";
    }
    return kExitClean;
}

template <typename Int>
inline std::vector<Int> parse_csv_list(const std::string& csv, std::string_view what) {
    std::vector<Int> out;
    for (auto tok : split_char(csv, ','))
        if (!tok.empty()) out.push_back(parse_int<Int>(tok, Errc::invalid_argument, 0, what));
    if (out.empty()) throw Error(Errc::invalid_argument, "empty " + std::string(what) + " list");
    return out;
}

inline int run(std::vector<std::string> args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    CLI::App app{"hypercall/syscall attack-signature distillation and detection"};
    app.require_subcommand(1);

    CommonOpts common;
    const char* env_db = std::getenv("MADCROW_DB");
    if (env_db) common.db_path = env_db;

    std::string attack_id;
    std::vector<std::string> trace_files;
    ScoringScheme scheme;
    DistillParams distill_params;

    auto* sign = app.add_subcommand("sign", "distill a signature from attack traces");
    sign->add_option("--attack-id", attack_id, "signature identifier")->required();
    sign->add_option("--db", common.db_path, "signature database path")
        ->required(common.db_path.empty());
    sign->add_option("--alphabet", common.alphabet_path, "alphabet file (default <db>.alphabet)");
    sign->add_option("--g-split", distill_params.g_split, "gap run that splits segments");
    sign->add_option("--m-min", distill_params.m_min, "minimum segment length");
    sign->add_option("--threshold", distill_params.default_threshold,
                     "stored detection threshold");
    sign->add_option("--match", scheme.match, "match score");
    sign->add_option("--mismatch", scheme.mismatch, "mismatch penalty");
    sign->add_option("--gap", scheme.gap, "gap penalty");
    sign->add_flag("--allow-guest-syscalls", common.allow_guest_syscalls,
                   "accept syscall events outside dom0");
    sign->add_option("traces", trace_files, "attack trace files (>= 2)");

    std::string alerts_path;
    DetectorConfig cfg;
    double t_corr_s = 300.0;

    auto* detect = app.add_subcommand("detect", "scan traces against the signature db");
    detect->add_option("--db", common.db_path, "signature database path")
        ->required(common.db_path.empty());
    detect->add_option("--alphabet", common.alphabet_path,
                       "alphabet file (default <db>.alphabet)");
    detect->add_option("--alerts", alerts_path, "alert log path")->required();
    detect->add_option("--tau", cfg.tau, "normalized hit threshold");
    detect->add_option("--window", cfg.window_capacity, "per-stream window capacity");
    detect->add_option("--stride", cfg.rescan_stride, "events between scans");
    detect->add_option("--t-corr-s", t_corr_s, "correlation window, seconds");
    detect->add_option("--heartbeat-misses", cfg.heartbeat_misses,
                       "missed heartbeat periods before a liveness alert");
    detect->add_flag("--allow-guest-syscalls", common.allow_guest_syscalls,
                     "accept syscall events outside dom0");
    detect->add_option("traces", trace_files, "trace files to replay")->required();

    std::string scenario_name;
    std::uint64_t seed = 1;
    ScenarioParams scenario_params;
    std::string out_dir;

    auto* simulate = app.add_subcommand("simulate", "generate a labeled attack scenario");
    simulate->add_option("--scenario", scenario_name, "preset name")->required();
    simulate->add_option("--seed", seed, "rng seed");
    simulate->add_option("--noise-ratio", scenario_params.noise_ratio,
                         "benign-to-attack event ratio");
    simulate->add_option("--streams", scenario_params.streams, "evaluation stream count");
    simulate->add_option("--alphabet-size", scenario_params.alphabet_size, "symbol count");
    simulate->add_option("--out-dir", out_dir, "output directory")->required();

    std::string lengths_csv = "512,4096";
    std::string lanes_csv = "1,4,8";
    int iters = 3;
    bool verify = false;

    auto* bench = app.add_subcommand("bench", "time the alignment kernels");
    bench->add_option("--lengths", lengths_csv, "comma-separated sequence lengths");
    bench->add_option("--lanes", lanes_csv, "comma-separated wavefront lane counts");
    bench->add_option("--iters", iters, "iterations per measurement");
    bench->add_flag("--verify", verify, "assert wavefront == scalar before timing");

    std::vector<const char*> argv;
    argv.push_back("madcrow");
    for (const std::string& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitClean;
    } catch (const CLI::ParseError& e) {
        err << "madcrow: " << e.what() << "\n";
        return kExitError;
    }

    try {
        if (sign->parsed())
            return cmd_sign(common, attack_id, trace_files, scheme, distill_params, out, err);
        if (detect->parsed()) {
            cfg.correlation_window_us = static_cast<std::int64_t>(t_corr_s * 1e6);
            return cmd_detect(common, alerts_path, trace_files, cfg, out, err);
        }
        if (simulate->parsed())
            return cmd_simulate(scenario_name, seed, scenario_params, out_dir, out);
        if (bench->parsed())
            return cmd_bench(parse_csv_list<std::size_t>(lengths_csv, "length"),
                             parse_csv_list<unsigned>(lanes_csv, "lanes"), iters, verify, out);
    } catch (const Error& e) {
        err << "madcrow: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        err << "madcrow: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}

} // namespace madcrow::cli
