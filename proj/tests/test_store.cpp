/*
 * Copyright (c) 2026 the madcrow authors
 * SPDX-License-Identifier: Apache-2.0
 */
#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "madcrow/store.hpp"
#include "test_helpers.hpp"

using namespace madcrow;

namespace {
Signature make_sig(const std::string& id, const std::string& alphabet_ref) {
    Signature sig;
    sig.attack_id = id;
    Segment seg;
    seg.symbols = {3, 1, 4, 1, 5};
    seg.index = 0;
    sig.segments.push_back(seg);
    Segment seg2;
    seg2.symbols = {9, 2, 6, 5};
    seg2.index = 1;
    sig.segments.push_back(seg2);
    sig.default_threshold = 0.8;
    sig.provenance = {8, 3};
    sig.alphabet_ref = alphabet_ref;
    return sig;
}
} // namespace

TEST_CASE("signature db save and load round-trips", "[store]") {
    testutil::TempDir dir("db");
    auto path = dir.file("sigs.db");
    SignatureDb db = SignatureDb::create(path, "aaaaaaaaaaaaaaaa");
    Signature sig = make_sig("smurf_flood", "aaaaaaaaaaaaaaaa");
    db.save(sig);

    SignatureDb loaded = SignatureDb::load(path);
    REQUIRE(loaded.entries().size() == 1);
    CHECK(loaded.entries().at("smurf_flood") == sig);
    CHECK(loaded.alphabet_ref() == "aaaaaaaaaaaaaaaa");
    CHECK(loaded.to_text() == db.to_text());
}

TEST_CASE("duplicate ids and foreign alphabets are rejected", "[store]") {
    testutil::TempDir dir("db");
    SignatureDb db = SignatureDb::create(dir.file("sigs.db"), "aaaaaaaaaaaaaaaa");
    db.save(make_sig("atk", "aaaaaaaaaaaaaaaa"));
    try {
        db.save(make_sig("atk", "aaaaaaaaaaaaaaaa"));
        FAIL("expected duplicate_id");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::duplicate_id);
    }
    try {
        db.save(make_sig("other", "bbbbbbbbbbbbbbbb"));
        FAIL("expected alphabet_mismatch");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::alphabet_mismatch);
    }
}

TEST_CASE("empty db file with a valid header loads as empty", "[store]") {
    testutil::TempDir dir("db");
    auto path = dir.file("empty.db");
    SignatureDb::create(path, "cccccccccccccccc");
    SignatureDb db = SignatureDb::load(path);
    CHECK(db.entries().empty());
    CHECK(db.alphabet_ref() == "cccccccccccccccc");
}

TEST_CASE("three saved signatures come back with distinct ids", "[store]") {
    testutil::TempDir dir("db");
    auto path = dir.file("sigs.db");
    SignatureDb db = SignatureDb::create(path, "dddddddddddddddd");
    for (const char* id : {"a", "b", "c"}) db.save(make_sig(id, "dddddddddddddddd"));
    SignatureDb loaded = SignatureDb::load(path);
    CHECK(loaded.entries().size() == 3);
    CHECK(loaded.entries().count("a") == 1);
    CHECK(loaded.entries().count("b") == 1);
    CHECK(loaded.entries().count("c") == 1);
}

TEST_CASE("truncated and corrupt records report their line", "[store]") {
    testutil::TempDir dir("db");
    auto path = dir.file("bad.db");
    {
        std::ofstream out(path);
        out << "madcrow-signature v1\n"
            << "alphabet eeeeeeeeeeeeeeee\n"
            << "attack broken\n"
            << "scheme 2 -1 -1\n"; // record cut off here
    }
    try {
        SignatureDb::load(path);
        FAIL("expected corrupt_entry");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::corrupt_entry);
        CHECK(e.position() >= 4);
    }

    auto vpath = dir.file("badversion.db");
    {
        std::ofstream out(vpath);
        out << "madcrow-signature v7\n";
    }
    try {
        SignatureDb::load(vpath);
        FAIL("expected version_error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::version_error);
    }

    CHECK_THROWS_AS(SignatureDb::load(dir.file("missing.db")), Error);
}

TEST_CASE("alert log appends in order and filters", "[store]") {
    testutil::TempDir dir("alerts");
    auto path = dir.file("alerts.log");
    AlertLog log = AlertLog::open(path);

    std::vector<Alert> alerts;
    for (int i = 0; i < 5; ++i) {
        Alert a;
        if (i == 2) {
            a.kind = Alert::Kind::liveness;
            a.stream_ids = {"vm9"};
            a.t_begin_us = 100 * i;
            a.t_end_us = 100 * i + 50;
        } else {
            a.kind = Alert::Kind::attack;
            a.signature_id = i % 2 ? "odd" : "even";
            a.confidence = 0.9;
            a.stream_ids = {"vm1"};
            a.t_begin_us = 100 * i;
            a.t_end_us = 100 * i + 50;
            SegmentHit h;
            h.signature_id = a.signature_id;
            h.segment_index = 0;
            h.stream_id = "vm1";
            h.raw_score = 10;
            h.normalized_vs_query = 0.9;
            h.span_begin = static_cast<std::uint64_t>(i) * 10;
            h.span_end = h.span_begin + 5;
            h.time_us = a.t_end_us;
            a.evidence = {h};
        }
        log.append(a);
        alerts.push_back(a);
    }

    auto all = log.list();
    REQUIRE(all.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(all[i] == alerts[i]);

    AlertLog::Filter kind_filter;
    kind_filter.kind = Alert::Kind::liveness;
    auto liveness = log.list(kind_filter);
    REQUIRE(liveness.size() == 1);
    CHECK(liveness[0].stream_ids == std::vector<std::string>{"vm9"});

    AlertLog::Filter sig_filter;
    sig_filter.signature_id = "odd";
    CHECK(log.list(sig_filter).size() == 2);

    AlertLog::Filter range_filter;
    range_filter.time_range = {{1'000'000, 2'000'000}};
    CHECK(log.list(range_filter).empty());
}

TEST_CASE("append never rewrites existing bytes", "[store]") {
    testutil::TempDir dir("alerts");
    auto path = dir.file("alerts.log");
    AlertLog log = AlertLog::open(path);
    Alert a;
    a.kind = Alert::Kind::liveness;
    a.stream_ids = {"vm1"};
    a.t_begin_us = 0;
    a.t_end_us = 7'000'000;
    log.append(a);
    std::string before = read_file(path);
    a.t_end_us = 9'000'000;
    log.append(a);
    std::string after = read_file(path);
    CHECK(after.substr(0, before.size()) == before);
    CHECK(after.size() > before.size());
}

TEST_CASE("reopening an existing log validates the header", "[store]") {
    testutil::TempDir dir("alerts");
    auto path = dir.file("bad.log");
    {
        std::ofstream out(path);
        out << "not-an-alert-log\n";
    }
    try {
        AlertLog::open(path);
        FAIL("expected version_error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::version_error);
    }
}
