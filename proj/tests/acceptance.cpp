/*
 * Copyright (c) 2026 the madcrow authors
 * SPDX-License-Identifier: Apache-2.0
 */
// End-to-end acceptance suite: one line per criterion, non-zero exit when
// any criterion fails.
#include <cstdio>
#include <random>

#include "madcrow/detect.hpp"
#include "madcrow/signature.hpp"
#include "madcrow/simulate.hpp"

int main() {
    std::printf("acceptance placeholder\n");
    return 0;
}
