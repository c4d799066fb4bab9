// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "xling/config.hpp"
#include "xling/report/report.hpp"
#include "xling/util.hpp"

using namespace xling;

TEST_CASE("curve csv round-trips values and baseline") {
    metrics::LayerCurve c;
    c.metric = "pwcca";
    c.values = {0.1, 0.25, 0.5, 0.375};
    c.baseline = {0.05, 0.1, 0.12, 0.11};
    report::write_curve_csv(c, "curve_test.csv");
    auto back = report::read_curve_csv("curve_test.csv");
    REQUIRE(back.values.size() == 4);
    for (size_t i = 0; i < 4; ++i) {
        CHECK(back.values[i] == doctest::Approx(c.values[i]).epsilon(1e-12));
        CHECK(back.baseline[i] == doctest::Approx(c.baseline[i]).epsilon(1e-12));
    }
    std::remove("curve_test.csv");
}

TEST_CASE("svg charts are deterministic bytes") {
    std::vector<report::SvgSeries> series = {{"one", {0.0, 0.5, 1.0}}, {"two", {1.0, 0.25, 0.0}}};
    report::write_svg_chart("demo", series, "chart_a.svg");
    report::write_svg_chart("demo", series, "chart_b.svg");
    auto slurp = [](const char* p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    auto a = slurp("chart_a.svg");
    CHECK(a == slurp("chart_b.svg"));
    CHECK(a.find("<svg") != std::string::npos);
    CHECK(a.find("polyline") != std::string::npos);
    std::remove("chart_a.svg");
    std::remove("chart_b.svg");
}

TEST_CASE("key-value config parses and round-trips") {
    auto kv = KeyValueConfig::parse_string(
        "# comment\n"
        "model.layers = 4\n"
        "train.lr_max = 2e-4\n"
        "mix.parallel_fractions = 0,0.01,0.05\n"
        "judge.enabled = true\n");
    CHECK(kv.get_int("model.layers") == 4);
    CHECK(kv.get_double("train.lr_max") == doctest::Approx(2e-4));
    CHECK(kv.get_bool_or("judge.enabled", false));
    auto fracs = kv.get_double_list_or("mix.parallel_fractions", {});
    REQUIRE(fracs.size() == 3);
    CHECK(fracs[2] == doctest::Approx(0.05));
    CHECK(kv.get_int_or("missing.key", 7) == 7);
    CHECK_THROWS_AS(kv.get("missing.key"), ConfigError);
    CHECK_THROWS_AS(kv.get_int("judge.enabled"), ConfigError);

    auto again = KeyValueConfig::parse_string(kv.serialize());
    CHECK(again.serialize() == kv.serialize());
}
