/*
 * Copyright (c) 2026 the madcrow authors
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "madcrow/error.hpp"
#include "madcrow/signature.hpp"
#include "madcrow/trace.hpp"
#include "madcrow/util.hpp"

namespace madcrow {

/// Pinned generator: std::mt19937_64 with explicit uniform mappings. The
/// algorithm is part of the test fixture; seeded runs must reproduce
/// byte-identical traces across platforms.
class SimRng {
public:
    explicit SimRng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next() { return gen_(); }

    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : gen_() % n; }

private:
    std::mt19937_64 gen_;
};

/// Hierarchical seed split: one root seed, one child stream per tag.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view tag) {
    return fnv1a64(tag, fnv1a64_mix(14695981039346656037ull, root));
}

struct NoiseModel {
    enum class Dist { uniform, zipf };

    std::uint32_t alphabet_size = 64;
    Dist dist = Dist::zipf;
    double zipf_s = 1.1;
    std::int64_t mean_inter_event_us = 1000;

    void validate() const {
        if (alphabet_size < 2)
            throw Error(Errc::invalid_argument, "alphabet_size must be >= 2");
        if (zipf_s <= 0.0) throw Error(Errc::invalid_argument, "zipf s must be > 0");
        if (mean_inter_event_us < 1)
            throw Error(Errc::invalid_argument, "mean_inter_event_us must be >= 1");
    }
};

namespace detail {

/// CDF-inversion sampler; symbol k gets weight (k+1)^-s under zipf.
class SymbolSampler {
public:
    SymbolSampler(const NoiseModel& model) {
        cdf_.resize(model.alphabet_size);
        double total = 0.0;
        for (std::uint32_t k = 0; k < model.alphabet_size; ++k) {
            double w = model.dist == NoiseModel::Dist::uniform
                           ? 1.0
                           : std::pow(static_cast<double>(k + 1), -model.zipf_s);
            total += w;
            cdf_[k] = total;
        }
        for (double& c : cdf_) c /= total;
    }

    Symbol sample(SimRng& rng) const {
        double u = rng.uniform();
        auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
        if (it == cdf_.end()) --it;
        return static_cast<Symbol>(it - cdf_.begin());
    }

private:
    std::vector<double> cdf_;
};

inline std::int64_t exp_gap(SimRng& rng, std::int64_t mean_us) {
    double u = rng.uniform();
    return 1 + static_cast<std::int64_t>(-std::log1p(-u) * static_cast<double>(mean_us));
}

} // namespace detail

/// Deterministic benign traffic for one stream.
inline CallSequence gen_benign(std::uint64_t seed, std::size_t n_events, const NoiseModel& model,
                               std::string stream_id, std::int64_t start_us = 0) {
    model.validate();
    SimRng rng(derive_seed(seed, "benign:" + stream_id));
    detail::SymbolSampler sampler(model);
    CallSequence seq;
    seq.stream_id = std::move(stream_id);
    seq.symbols.reserve(n_events);
    seq.timestamps_us.reserve(n_events);
    std::int64_t t = start_us;
    for (std::size_t i = 0; i < n_events; ++i) {
        t += detail::exp_gap(rng, model.mean_inter_event_us);
        seq.symbols.push_back(sampler.sample(rng));
        seq.timestamps_us.push_back(t);
    }
    return seq;
}

struct InjectionPlan {
    std::vector<Symbol> attack_sequence;
    std::string attack_id;
    std::vector<std::string> target_streams;  // one per piece
    std::vector<std::size_t> split_points;    // interior cut indices, ascending
    double mutation_rate = 0.0;               // substitution probability per symbol
    double insertion_rate = 0.0;              // benign insertion after each symbol
    std::int64_t start_time_us = 0;
    std::int64_t stagger_us = 1'000'000;      // delay between consecutive pieces
    std::uint32_t symbol_space = 64;          // domain for mutations and insertions
};

struct TruthEntry {
    std::string stream_id;
    std::uint64_t offset = 0; // final symbol index in the injected stream
    std::string attack_id;
    bool mutated = false;

    bool operator==(const TruthEntry&) const = default;
};

struct GroundTruth {
    std::vector<TruthEntry> entries;
    std::uint32_t expected_alerts = 0;

    bool operator==(const GroundTruth&) const = default;
};

/// Splices the attack pieces into the target streams at their planned
/// times, applying seeded substitutions and benign insertions. Every
/// injected attack symbol lands in the ground truth with its final offset.
inline std::pair<std::vector<CallSequence>, GroundTruth> inject(std::vector<CallSequence> streams,
                                                                const InjectionPlan& plan,
                                                                std::uint64_t seed) {
    if (plan.mutation_rate < 0.0 || plan.mutation_rate >= 1.0 || plan.insertion_rate < 0.0 ||
        plan.insertion_rate >= 1.0)
        throw Error(Errc::invalid_argument, "rates must lie in [0, 1)");
    const std::size_t pieces = plan.split_points.size() + 1;
    if (plan.target_streams.size() != pieces)
        throw Error(Errc::plan_out_of_range, "plan has " + std::to_string(pieces) +
                                                 " pieces but " +
                                                 std::to_string(plan.target_streams.size()) +
                                                 " target streams");
    std::size_t prev_cut = 0;
    for (std::size_t cut : plan.split_points) {
        if (cut <= prev_cut || cut >= plan.attack_sequence.size())
            throw Error(Errc::plan_out_of_range, "bad split point " + std::to_string(cut));
        prev_cut = cut;
    }

    auto stream_of = [&](const std::string& id) -> CallSequence& {
        for (CallSequence& s : streams)
            if (s.stream_id == id) return s;
        throw Error(Errc::plan_out_of_range, "plan targets unknown stream '" + id + "'");
    };

    SimRng rng(derive_seed(seed, "inject:" + plan.attack_id));
    GroundTruth truth;
    std::map<std::string, std::size_t> min_pos; // keep pieces ordered within a stream

    for (std::size_t k = 0; k < pieces; ++k) {
        const std::size_t lo = k == 0 ? 0 : plan.split_points[k - 1];
        const std::size_t hi =
            k == plan.split_points.size() ? plan.attack_sequence.size() : plan.split_points[k];
        CallSequence& target = stream_of(plan.target_streams[k]);
        const std::int64_t when =
            plan.start_time_us + static_cast<std::int64_t>(k) * plan.stagger_us;

        std::size_t pos = std::lower_bound(target.timestamps_us.begin(),
                                           target.timestamps_us.end(), when) -
                          target.timestamps_us.begin();
        pos = std::max(pos, min_pos[target.stream_id]);

        std::vector<Symbol> block;
        std::vector<std::int64_t> block_ts;
        std::vector<std::pair<std::size_t, bool>> attack_offsets; // offset in block, mutated
        const std::int64_t block_time = pos < target.timestamps_us.size()
                                            ? target.timestamps_us[pos]
                                            : (target.timestamps_us.empty()
                                                   ? when
                                                   : target.timestamps_us.back() + 1);
        for (std::size_t i = lo; i < hi; ++i) {
            Symbol sym = plan.attack_sequence[i];
            bool mutated = false;
            if (rng.uniform() < plan.mutation_rate) {
                Symbol repl = static_cast<Symbol>(rng.below(plan.symbol_space));
                if (repl == sym) repl = (repl + 1) % plan.symbol_space;
                sym = repl;
                mutated = true;
            }
            attack_offsets.emplace_back(block.size(), mutated);
            block.push_back(sym);
            block_ts.push_back(block_time);
            if (rng.uniform() < plan.insertion_rate) {
                block.push_back(static_cast<Symbol>(rng.below(plan.symbol_space)));
                block_ts.push_back(block_time);
            }
        }

        target.symbols.insert(target.symbols.begin() + static_cast<std::ptrdiff_t>(pos),
                              block.begin(), block.end());
        target.timestamps_us.insert(
            target.timestamps_us.begin() + static_cast<std::ptrdiff_t>(pos), block_ts.begin(),
            block_ts.end());
        for (auto [off, mutated] : attack_offsets)
            truth.entries.push_back(
                {target.stream_id, pos + off, plan.attack_id, mutated});
        min_pos[target.stream_id] = pos + block.size();
    }
    return {std::move(streams), std::move(truth)};
}

struct ScenarioParams {
    std::uint32_t alphabet_size = 64;
    double zipf_s = 1.1;
    std::int64_t mean_inter_event_us = 1000;
    std::uint32_t streams = 3;
    double noise_ratio = 10.0;
    std::uint32_t signing_traces = 8;
    double sign_mutation = 0.02;
    double sign_insertion = 0.04;
    double eval_mutation = 0.03;
    double eval_insertion = 0.05;
};

struct ScenarioOutput {
    std::string attack_id;
    Alphabet alphabet; // frozen
    std::vector<Symbol> attack_motif;
    std::vector<std::vector<Symbol>> phases;
    AttackTraceSet signing;
    std::vector<CallSequence> eval_streams;
    GroundTruth truth;
    InjectionPlan plan;
    NoiseModel noise;
};

namespace detail {

/// Fixed name table; motif names sit at documented zipf ranks so benign
/// traffic uses them at realistic (moderate) rates.
inline std::vector<std::string> scenario_names(std::uint32_t alphabet_size) {
    static const char* base[] = {
        "sched_op", "event_channel_op", "memory_op", "grant_table_op", "vcpu_op",
        "xen_version", "console_io", "set_timer_op", "multicall", "update_va_mapping",
        "platform_op", "physdev_op", "mmu_update", "hvm_op", "sysctl",
        "domctl", "iret", "callback_op", "ping", "vm_assist",
        "mmuext_op", "nmi_op", "kexec_op", "tmem_op", "xenpmu_op",
        "argo_op", "dm_op", "hypfs_op", "xsm_op", "sched_yield",
        "nslookup", "poll", "block", "shutdown", "remote_shutdown",
        "debug_op", "get_cpu_freq", "set_debugreg", "get_debugreg", "fpu_taskswitch",
        "set_trap_table", "set_callbacks", "set_segment_base", "update_descriptor",
        "stack_switch", "vm86_mode", "update_va_otherdomain", "set_gdt",
        "acm_op", "nvram_op", "watchdog", "flush_tlbs", "nmap_probe",
    };
    constexpr std::uint32_t base_count = sizeof(base) / sizeof(base[0]);
    if (alphabet_size < base_count)
        throw Error(Errc::invalid_argument,
                    "scenario alphabet must hold at least " + std::to_string(base_count) +
                        " symbols");
    std::vector<std::string> names;
    names.reserve(alphabet_size);
    for (std::uint32_t i = 0; i < alphabet_size; ++i) {
        if (i < base_count)
            names.emplace_back(base[i]);
        else {
            char buf[16];
            std::snprintf(buf, sizeof buf, "op_%02u", i);
            names.emplace_back(buf);
        }
    }
    return names;
}

inline std::vector<Symbol> repeat_cycle(std::initializer_list<Symbol> cycle,
                                        std::size_t repeats) {
    std::vector<Symbol> out;
    out.reserve(cycle.size() * repeats);
    for (std::size_t r = 0; r < repeats; ++r)
        for (Symbol s : cycle) out.push_back(s);
    return out;
}

} // namespace detail

/// Applies seeded substitutions and benign insertions to a symbol run; the
/// shared perturbation model for signing traces and robustness harnesses.
inline std::vector<Symbol> perturb(std::span<const Symbol> input, double sub_rate,
                                   double ins_rate, std::uint32_t symbol_space, SimRng& rng) {
    std::vector<Symbol> out;
    out.reserve(input.size() * 2);
    for (Symbol sym : input) {
        if (sub_rate > 0.0 && rng.uniform() < sub_rate) {
            Symbol repl = static_cast<Symbol>(rng.below(symbol_space));
            if (repl == sym) repl = (repl + 1) % symbol_space;
            sym = repl;
        }
        out.push_back(sym);
        if (ins_rate > 0.0 && rng.uniform() < ins_rate)
            out.push_back(static_cast<Symbol>(rng.below(symbol_space)));
    }
    return out;
}

/// Preset end-to-end scenario: an attack motif (split into phases), eight
/// signing traces of it, and labeled evaluation streams at the requested
/// noise ratio with the phases scattered across the streams.
inline ScenarioOutput scenario(std::string_view name, const ScenarioParams& params,
                               std::uint64_t seed) {
    ScenarioOutput out;
    auto names = detail::scenario_names(params.alphabet_size);
    for (std::uint32_t i = 0; i < params.alphabet_size; ++i)
        out.alphabet.encode(CallKind::hypercall, names[i]);
    out.alphabet.freeze();

    auto sym = [&](std::string_view n) {
        return *out.alphabet.find(CallKind::hypercall, n);
    };
    const Symbol ping = sym("ping"), nslookup = sym("nslookup"), nmap = sym("nmap_probe");
    const Symbol mmu = sym("mmu_update"), va = sym("update_va_mapping");
    const Symbol trap = sym("set_trap_table"), stack = sym("stack_switch");
    const Symbol gdt = sym("set_gdt");

    if (name == "smurf_flood") {
        out.phases = {detail::repeat_cycle({ping}, 48)};
    } else if (name == "coresidence_recon") {
        out.phases = {detail::repeat_cycle({nslookup, ping}, 8),
                      detail::repeat_cycle({ping, nmap}, 8),
                      detail::repeat_cycle({nslookup, ping, nmap}, 5)};
    } else if (name == "mmu_hijack") {
        out.phases = {detail::repeat_cycle({mmu, va, mmu, trap}, 4),
                      detail::repeat_cycle({stack, mmu, gdt, mmu}, 4)};
    } else {
        throw Error(Errc::unknown_scenario, "unknown scenario '" + std::string(name) + "'");
    }
    out.attack_id = std::string(name);
    for (const auto& phase : out.phases)
        out.attack_motif.insert(out.attack_motif.end(), phase.begin(), phase.end());

    out.noise = NoiseModel{params.alphabet_size, NoiseModel::Dist::zipf, params.zipf_s,
                           params.mean_inter_event_us};

    // Signing traces: the motif with fresh inter-phase filler per run, plus
    // light perturbation; pads at both ends stand in for surrounding noise.
    out.signing.attack_id = out.attack_id;
    out.signing.alphabet_ref = out.alphabet.id();
    for (std::uint32_t t = 0; t < params.signing_traces; ++t) {
        SimRng rng(derive_seed(seed, "sign:" + out.attack_id + "#" + std::to_string(t)));
        std::vector<Symbol> run;
        auto pad = [&](std::size_t n) {
            for (std::size_t i = 0; i < n; ++i)
                run.push_back(static_cast<Symbol>(rng.below(params.alphabet_size)));
        };
        pad(3 + rng.below(4));
        for (std::size_t p = 0; p < out.phases.size(); ++p) {
            if (p) pad(5 + rng.below(3)); // inter-phase filler, differs per run
            auto perturbed = perturb(out.phases[p], params.sign_mutation, params.sign_insertion,
                                     params.alphabet_size, rng);
            run.insert(run.end(), perturbed.begin(), perturbed.end());
        }
        pad(3 + rng.below(4));

        CallSequence seq;
        seq.stream_id = out.attack_id + "-run" + std::to_string(t);
        seq.symbols = std::move(run);
        std::int64_t ts = 0;
        for (std::size_t i = 0; i < seq.symbols.size(); ++i) {
            ts += detail::exp_gap(rng, params.mean_inter_event_us);
            seq.timestamps_us.push_back(ts);
        }
        out.signing.sequences.push_back(std::move(seq));
    }

    // Evaluation streams: zipf noise at the requested ratio, one phase per
    // piece scattered round-robin across the streams.
    const std::size_t per_stream = static_cast<std::size_t>(
        std::ceil(params.noise_ratio * static_cast<double>(out.attack_motif.size()) /
                  static_cast<double>(params.streams)));
    std::vector<CallSequence> streams;
    for (std::uint32_t i = 0; i < params.streams; ++i)
        streams.push_back(gen_benign(derive_seed(seed, "eval"), per_stream, out.noise,
                                     "vm" + std::to_string(i + 1)));

    out.plan.attack_sequence = out.attack_motif;
    out.plan.attack_id = out.attack_id;
    out.plan.mutation_rate = params.eval_mutation;
    out.plan.insertion_rate = params.eval_insertion;
    out.plan.symbol_space = params.alphabet_size;
    out.plan.stagger_us = 20 * params.mean_inter_event_us;
    std::size_t cum = 0;
    for (std::size_t p = 0; p < out.phases.size(); ++p) {
        out.plan.target_streams.push_back("vm" + std::to_string(p % params.streams + 1));
        if (p + 1 < out.phases.size()) {
            cum += out.phases[p].size();
            out.plan.split_points.push_back(cum);
        }
    }
    const std::int64_t stream_span =
        streams.front().timestamps_us.empty() ? 0 : streams.front().timestamps_us.back();
    out.plan.start_time_us = stream_span / 2;

    auto [injected, truth] = inject(std::move(streams), out.plan, derive_seed(seed, "plan"));
    out.eval_streams = std::move(injected);
    out.truth = std::move(truth);
    out.truth.expected_alerts = 1;
    return out;
}

inline constexpr std::string_view kTruthHeader = "madcrow-truth v1";

inline std::string format_truth(const GroundTruth& truth) {
    std::string out(kTruthHeader);
    out += "\nexpect_alerts " + std::to_string(truth.expected_alerts) + "\n";
    for (const TruthEntry& e : truth.entries) {
        out += "sym " + e.stream_id + " " + std::to_string(e.offset) + " " + e.attack_id + " " +
               (e.mutated ? "1" : "0") + "\n";
    }
    return out;
}

inline GroundTruth parse_truth(std::string_view text) {
    auto lines = split_lines(text);
    if (lines.empty() || lines[0] != kTruthHeader)
        throw Error(Errc::version_error, "bad truth header", 1);
    if (lines.size() < 2)
        throw Error(Errc::corrupt_entry, "missing expect_alerts", 2);
    GroundTruth truth;
    {
        auto f = split_ws(lines[1]);
        if (f.size() != 2 || f[0] != "expect_alerts")
            throw Error(Errc::corrupt_entry, "expected 'expect_alerts <n>'", 2);
        truth.expected_alerts =
            parse_int<std::uint32_t>(f[1], Errc::corrupt_entry, 2, "alert count");
    }
    for (std::size_t i = 2; i < lines.size(); ++i) {
        auto f = split_ws(lines[i]);
        if (f.size() != 5 || f[0] != "sym")
            throw Error(Errc::corrupt_entry, "expected 'sym <stream> <offset> <attack> <0|1>'",
                        i + 1);
        TruthEntry e;
        e.stream_id = std::string(f[1]);
        e.offset = parse_int<std::uint64_t>(f[2], Errc::corrupt_entry, i + 1, "offset");
        e.attack_id = std::string(f[3]);
        if (f[4] == "1")
            e.mutated = true;
        else if (f[4] == "0")
            e.mutated = false;
        else
            throw Error(Errc::corrupt_entry, "mutated flag must be 0 or 1", i + 1);
        truth.entries.push_back(std::move(e));
    }
    return truth;
}

} // namespace madcrow
