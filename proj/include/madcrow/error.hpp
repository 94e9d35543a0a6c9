/*
 * Copyright (c) 2026 the madcrow authors
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace madcrow {

enum class Errc {
    parse_error,
    unknown_call,
    mixed_streams,
    unsorted_input,
    policy_violation,
    too_few_sequences,
    degenerate_signature,
    unknown_stream,
    unknown_scenario,
    plan_out_of_range,
    duplicate_id,
    alphabet_mismatch,
    storage_error,
    version_error,
    corrupt_entry,
    invalid_argument,
};

/// Single exception type for all domain errors. `position()` carries a
/// 1-based column (parse errors) or line number (file errors), 0 otherwise.
class Error : public std::runtime_error {
public:
    Error(Errc code, std::string message, std::size_t position = 0)
        : std::runtime_error(std::move(message)), code_(code), position_(position) {}

    Errc code() const noexcept { return code_; }
    std::size_t position() const noexcept { return position_; }

private:
    Errc code_;
    std::size_t position_;
};

} // namespace madcrow
