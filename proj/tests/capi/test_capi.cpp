// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

// Exercises the shared library through its C header only.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "roadrisk/roadrisk.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

namespace {

rr_config* config_from(const std::string& text, const std::string& base = ".") {
    rr_config* c = nullptr;
    REQUIRE(rr_config_from_string(text.c_str(), base.c_str(), &c) == RR_OK);
    return c;
}

} // namespace

TEST_CASE("version and exit-code mapping") {
    CHECK(std::strlen(rr_version()) > 0);
    CHECK(rr_exit_code(RR_OK) == 0);
    CHECK(rr_exit_code(RR_ERR_CONFIG) == 2);
    CHECK(rr_exit_code(RR_ERR_INVALID_ARGUMENT) == 2);
    CHECK(rr_exit_code(RR_ERR_DATA) == 3);
    CHECK(rr_exit_code(RR_ERR_IO) == 3);
    CHECK(rr_exit_code(RR_ERR_MISSING_ARTIFACT) == 3);
    CHECK(rr_exit_code(RR_ERR_NUMERIC) == 4);
    CHECK(rr_exit_code(RR_ERR_INTERNAL) == 1);
}

TEST_CASE("config handles") {
    rr_config* c = config_from("[model]\nd = 16\n");
    char buf[8];
    size_t needed = 0;
    CHECK(rr_config_get(c, "model.d", buf, sizeof buf, &needed) == RR_OK);
    CHECK(std::string(buf) == "16");
    CHECK(needed == 3);
    CHECK(rr_config_get(c, "model.d", buf, 2, &needed) == RR_ERR_INVALID_ARGUMENT);
    CHECK(rr_config_get(c, "model.heads", buf, sizeof buf, &needed) == RR_ERR_INVALID_ARGUMENT);

    char h1[17], h2[17];
    CHECK(rr_config_hash(c, h1) == RR_OK);
    CHECK(std::strlen(h1) == 16);
    CHECK(rr_config_set(c, "model.d", "32") == RR_OK);
    CHECK(rr_config_hash(c, h2) == RR_OK);
    CHECK(std::string(h1) != std::string(h2));

    CHECK(rr_config_set(c, "model.width", "3") == RR_ERR_CONFIG);
    CHECK(std::string(rr_last_error_code()) == "UnknownKey");
    CHECK(std::strlen(rr_last_error()) > 0);
    CHECK(rr_config_set(nullptr, "model.d", "3") == RR_ERR_INVALID_ARGUMENT);
    rr_config_free(c);
    rr_config_free(nullptr);

    rr_config* bad = nullptr;
    CHECK(rr_config_from_string("[model]\nwidth=1\n", ".", &bad) == RR_ERR_CONFIG);
    CHECK(bad == nullptr);
    CHECK(rr_config_load("/nonexistent/run.cfg", &bad) == RR_ERR_CONFIG);
}

TEST_CASE("command table") {
    REQUIRE(rr_command_count() == 12);
    CHECK(std::string(rr_command_name(0)) == "ingest");
    CHECK(std::string(rr_command_name(11)) == "map");
    CHECK(rr_command_name(12) == nullptr);
}

TEST_CASE("commands report missing artifacts and unknown names") {
    const auto dir = std::filesystem::temp_directory_path() / "roadrisk_capi_cmd";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    rr_config* c = config_from("[paths]\ndata = a.csv\noutput = out\n", dir.string());
    CHECK(rr_cmd_run(c, "train") == RR_ERR_MISSING_ARTIFACT);
    CHECK(std::string(rr_last_error_code()) == "MissingArtifact");
    CHECK(rr_cmd_run(c, "nope") == RR_ERR_INVALID_ARGUMENT);
    rr_config_free(c);
}

TEST_CASE("graph from points") {
    // Three sites, each hit twice; each becomes one node.
    const std::vector<double> lon{-0.1200, -0.1200, -0.1100, -0.1100, -0.1000, -0.1000};
    const std::vector<double> lat{51.5000, 51.5000, 51.5000, 51.5000, 51.5050, 51.5050};
    rr_graph* g = nullptr;
    REQUIRE(rr_graph_from_points(lon.data(), lat.data(), lon.size(), 150.0, 2, 0.0, &g) == RR_OK);
    const size_t n = rr_graph_num_nodes(g);
    CHECK(n == 3);
    CHECK(rr_graph_num_edges(g) == 3);
    std::vector<double> a(n * n), an(n * n);
    CHECK(rr_graph_adjacency(g, 0, a.data(), a.size()) == RR_OK);
    CHECK(rr_graph_adjacency(g, 1, an.data(), an.size()) == RR_OK);
    CHECK(rr_graph_adjacency(g, 1, an.data(), 2) == RR_ERR_INVALID_ARGUMENT);
    for (size_t i = 0; i < n; ++i) {
        CHECK(a[i * n + i] == 0.0);
        double deg_i = 0.0;
        for (size_t j = 0; j < n; ++j) deg_i += a[i * n + j];
        for (size_t j = 0; j < n; ++j) {
            CHECK(a[i * n + j] == a[j * n + i]);
            double deg_j = 0.0;
            for (size_t q = 0; q < n; ++q) deg_j += a[j * n + q];
            CHECK(an[i * n + j] == doctest::Approx(a[i * n + j] / std::sqrt(deg_i * deg_j)).epsilon(1e-14));
        }
    }
    rr_graph_free(g);
    CHECK(rr_graph_from_points(nullptr, nullptr, 3, 150.0, 2, 0.0, &g) == RR_ERR_INVALID_ARGUMENT);
    CHECK(rr_graph_from_points(lon.data(), lat.data(), lon.size(), -1.0, 2, 0.0, &g) != RR_OK);
}

TEST_CASE("metrics, zones and distances") {
    const double yh[2] = {2, 2}, y[2] = {1, 4};
    double mae = 0, rmse = 0, mape = 0, frac = -1;
    CHECK(rr_metrics(yh, y, 2, 1e-8, &mae, &rmse, &mape, &frac) == RR_OK);
    CHECK(mae == 1.5);
    CHECK(rmse == doctest::Approx(std::sqrt(2.5)));
    CHECK(mape == doctest::Approx(75.0));
    CHECK(frac == 0.0);
    const double z[2] = {0, 0};
    CHECK(rr_metrics(yh, z, 2, 1e-8, &mae, &rmse, &mape, &frac) == RR_OK);
    CHECK(std::isnan(mape));
    CHECK(frac == 1.0);
    CHECK(rr_metrics(yh, y, 0, 1e-8, &mae, nullptr, nullptr, nullptr) == RR_ERR_INVALID_ARGUMENT);

    const double v[6] = {0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
    int zones[6];
    double pct[6];
    CHECK(rr_classify_zones(v, 6, zones, pct) == RR_OK);
    const int expected[6] = {0, 1, 2, 3, 4, 5};
    for (int i = 0; i < 6; ++i) CHECK(zones[i] == expected[i]);
    CHECK(pct[5] == 80.0);
    const double bad[1] = {NAN};
    CHECK(rr_classify_zones(bad, 1, zones, nullptr) == RR_ERR_NUMERIC);

    CHECK(rr_haversine_m(0, 0, 0, 0) == 0.0);
    CHECK(rr_haversine_m(-0.1278, 51.5074, 2.3522, 48.8566) == doctest::Approx(343556.0).epsilon(1e-3));
}

TEST_CASE("artifact loaders report missing files") {
    rr_tensor* t = nullptr;
    CHECK(rr_tensor_load("/nonexistent/a.bin", "/nonexistent/a.json", &t) != RR_OK);
    CHECK(t == nullptr);
    rr_graph* g = nullptr;
    CHECK(rr_graph_load("/nonexistent/nodes.csv", "/nonexistent/edges.csv", &g) != RR_OK);
}

TEST_CASE("synthetic writer") {
    const auto p = std::filesystem::temp_directory_path() / "roadrisk_capi_synth.csv";
    CHECK(rr_synth_write(p.string().c_str(), 5) == RR_OK);
    CHECK(std::filesystem::file_size(p) > 1000);
    CHECK(rr_synth_write(nullptr, 5) == RR_ERR_INVALID_ARGUMENT);
}
