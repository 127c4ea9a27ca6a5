// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <sstream>

#include "calendar.hpp"
#include "csv.hpp"
#include "error.hpp"
#include "test_support.hpp"
#include "util.hpp"

using namespace roadrisk;
using roadrisk::test::ymd;

TEST_SUITE("util") {
    TEST_CASE("fnv1a reference vectors") {
        // Published FNV-1a 64-bit test vectors.
        CHECK(hex64(fnv1a("")) == "cbf29ce484222325");
        CHECK(hex64(fnv1a("a")) == "af63dc4c8601ec8c");
        CHECK(hex64(fnv1a("foobar")) == "85944171f73967e8");
    }

    TEST_CASE("fnv1a chains like a single pass") {
        CHECK(fnv1a("bar", fnv1a("foo")) == fnv1a("foobar"));
    }

    TEST_CASE("format_double round-trips bit-exactly") {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(-1e6, 1e6);
        for (int i = 0; i < 2000; ++i) {
            const double v = i % 3 == 0 ? u(rng) * 1e-12 : u(rng);
            const auto back = parse_double(format_double(v));
            REQUIRE(back);
            CHECK(std::memcmp(&*back, &v, sizeof v) == 0);
        }
        CHECK(format_double(0.5) == "0.5");
    }

    TEST_CASE("numeric parsing rejects junk") {
        CHECK_FALSE(parse_double(""));
        CHECK_FALSE(parse_double("1.5x"));
        CHECK(parse_double(" 2.25 ").value() == 2.25);
        CHECK(parse_int("-1").value() == -1);
        CHECK_FALSE(parse_int("3.0"));
        CHECK_FALSE(parse_int("abc"));
    }

    TEST_CASE("split and trim") {
        CHECK(split("a,,b", ',') == std::vector<std::string>{"a", "", "b"});
        CHECK(trim("  x y \t") == "x y");
        CHECK(to_lower("AbC") == "abc");
    }

    TEST_CASE("file fingerprint tracks content") {
        const auto dir = test::scratch_dir("fingerprint");
        write_file(dir / "a.txt", "hello");
        write_file(dir / "b.txt", "hello");
        CHECK(fingerprint_file(dir / "a.txt") == fingerprint_file(dir / "b.txt"));
        write_file(dir / "b.txt", "hellp");
        CHECK(fingerprint_file(dir / "a.txt") != fingerprint_file(dir / "b.txt"));
        CHECK(read_file(dir / "a.txt") == "hello");
    }
}

TEST_SUITE("csv") {
    TEST_CASE("quoted fields with commas and escaped quotes") {
        const auto f = split_csv_line(R"(1,"a, b","say ""hi""",)");
        REQUIRE(f.size() == 4);
        CHECK(f[1] == "a, b");
        CHECK(f[2] == "say \"hi\"");
        CHECK(f[3].empty());
    }

    TEST_CASE("escape round-trips through the splitter") {
        const std::vector<std::string> fields{"plain", "with,comma", "with \"quote\"", ""};
        std::string line;
        for (std::size_t i = 0; i < fields.size(); ++i) line += (i ? "," : "") + csv_escape(fields[i]);
        CHECK(split_csv_line(line) == fields);
    }

    TEST_CASE("reader skips comments and maps columns") {
        std::istringstream in("# config_hash=abc\nx,y\n1,2\n\n3,4\n");
        CsvReader r(in);
        CHECK(r.header() == std::vector<std::string>{"x", "y"});
        CHECK(r.require_column("y") == 1);
        CHECK_FALSE(r.column("z"));
        std::vector<std::string> f;
        std::vector<std::string> xs;
        while (r.next(f)) xs.push_back(f[0]);
        CHECK(xs == std::vector<std::string>{"1", "3"});
    }

    TEST_CASE("missing column is a data error") {
        std::istringstream in("x,y\n");
        CsvReader r(in);
        try {
            r.require_column("z");
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Data);
        }
    }
}

TEST_SUITE("calendar") {
    TEST_CASE("ISO week numbering at year boundaries") {
        CHECK(iso_week_label(ymd(2010, 1, 4)) == "2010-W01");
        CHECK(iso_week_label(ymd(2010, 1, 3)) == "2009-W53");
        CHECK(iso_week_label(ymd(2008, 12, 29)) == "2009-W01");
        CHECK(iso_week_label(ymd(2014, 12, 31)) == "2015-W01");
        CHECK(iso_week_label(ymd(2012, 12, 31)) == "2013-W01");
        CHECK(iso_week_label(ymd(2015, 12, 31)) == "2015-W53");
    }

    TEST_CASE("week starts are Mondays") {
        for (int d = 0; d < 60; ++d) {
            const Date x = ymd(2011, 2, 1) + std::chrono::days{d};
            const Date s = iso_week_start(x);
            CHECK(std::chrono::weekday{s} == std::chrono::Monday);
            CHECK(s <= x);
            CHECK(x - s < std::chrono::days{7});
            CHECK(iso_week(s) == iso_week(x));
        }
    }

    TEST_CASE("date parsing accepts both file dialects") {
        CHECK(parse_date("2012-03-04").value() == ymd(2012, 3, 4));
        CHECK(parse_date("04/03/2012").value() == ymd(2012, 3, 4));
        CHECK(parse_date("2012-03-04 00:00").value() == ymd(2012, 3, 4));
        CHECK_FALSE(parse_date("2012-02-30"));
        CHECK_FALSE(parse_date("yesterday"));
        CHECK(format_date(ymd(2009, 1, 2)) == "2009-01-02");
    }

    TEST_CASE("period ranges are gap free and cover the bounds") {
        const Date a = ymd(2010, 1, 6), b = ymd(2010, 3, 2);
        for (auto g : {Granularity::Daily, Granularity::Weekly, Granularity::Monthly}) {
            const auto r = period_range(a, b, g);
            REQUIRE_FALSE(r.empty());
            CHECK(r.front() == period_start(a, g));
            CHECK(r.back() == period_start(b, g));
            for (std::size_t i = 1; i < r.size(); ++i) CHECK(r[i] == next_period(r[i - 1], g));
        }
        CHECK(period_range(a, b, Granularity::Daily).size() == 56);
        CHECK(period_range(a, b, Granularity::Weekly).size() == 9);
        CHECK(period_range(a, b, Granularity::Monthly).size() == 3);
        CHECK(period_label(ymd(2010, 3, 1), Granularity::Monthly) == "2010-03");
    }
}
