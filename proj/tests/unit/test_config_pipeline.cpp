// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>

#include "error.hpp"
#include "pipeline.hpp"
#include "run_config.hpp"
#include "test_support.hpp"
#include "util.hpp"

using namespace roadrisk;
namespace fs = std::filesystem;

namespace {

const char* kSmallConfig = R"(
[paths]
data = accidents.csv
output = out

[region]
name = small
lon_min = -0.16
lon_max = -0.09
lat_min = 51.49
lat_max = 51.53
start = 2010-01-04
end = 2013-12-29

[graph]
cell_size_m = 150
k = 4

[diffusion]
preset = Uniform_Weak

[model]
d = 8
heads = 2
t_in = 4
t_out = 4
dropout = 0

[train]
epochs_main = 1
epochs_finetune = 1
lr_main = 0.001
batch = 16
seed = 3
)";

} // namespace

TEST_SUITE("run_config") {
    TEST_CASE("parsing, comments and lookups") {
        const auto c = RunConfig::parse("# top\n[model]\nd = 32\nheads=4\n\n[train]\nseed = 9\n");
        CHECK(c.get("model.d") == "32");
        CHECK(c.get("model.heads") == "4");
        CHECK_FALSE(c.get("model.layers").has_value());
        CHECK(c.model().d == 32);
        CHECK(c.model().layers == 1);
        CHECK(c.seed() == 9);
    }

    TEST_CASE("unknown keys and malformed values are configuration errors") {
        auto expect_config = [](auto&& f) {
            try {
                f();
                FAIL("expected a configuration error");
            } catch (const Error& e) {
                CHECK(e.kind() == ErrorKind::Config);
            }
        };
        expect_config([] { RunConfig::parse("[model]\nwidth = 3\n"); });
        expect_config([] { RunConfig::parse("key = 1\n"); });
        expect_config([] { RunConfig::parse("[model]\nd = many\n").model(); });
        expect_config([] { RunConfig::parse("[diffusion]\npreset = Nope\n").diffusion(); });
        expect_config([] { RunConfig::parse("[features]\nset = XYZ\n").features(); });
        RunConfig c = RunConfig::parse("");
        expect_config([&] { c.set("bogus.key", "1"); });
    }

    TEST_CASE("hash is stable under formatting and changes with values") {
        const auto a = RunConfig::parse("[model]\nd=16\nheads=2\n[train]\nseed=1\n");
        const auto b = RunConfig::parse("# comment\n[train]\n  seed = 1\n[model]\nheads = 2\n d = 16 \n");
        CHECK(a.hash() == b.hash());
        CHECK(a.hash().size() == 16);
        auto c = a;
        c.set("model.d", "32");
        CHECK(c.hash() != a.hash());
        CHECK(c.get("model.d") == "32");
    }

    TEST_CASE("fixture config loads and resolves paths against its directory") {
        const auto c = RunConfig::load(fs::path(ROADRISK_SOURCE_DIR) / "configs" / "fixture.cfg");
        CHECK(c.data_path().filename() == "accidents.csv");
        CHECK(fs::exists(c.data_path()));
        CHECK(c.model().d == 16);
        CHECK(c.diffusion().name == "Differentiated_B");
        CHECK(c.train().batch == 4);
        CHECK(feature_mask_name(c.features()) == "SIE");
    }
}

TEST_SUITE("pipeline") {
    TEST_CASE("a short run writes manifests tied to the config hash") {
        const auto dir = test::scratch_dir("pipeline");
        write_synthetic_fixture(dir / "accidents.csv", 20260415);
        write_file(dir / "run.cfg", kSmallConfig);
        const auto cfg = RunConfig::load(dir / "run.cfg");
        const auto out = dir / "out";

        try {
            run_command(cfg, "train");
            FAIL("expected MissingArtifact");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::MissingArtifact);
        }
        CHECK_THROWS_AS(run_command(cfg, "nope"), Error);

        for (const char* cmd : {"ingest", "snr", "graph", "features", "diffuse", "train", "eval", "predict", "map"}) {
            INFO(cmd);
            run_command(cfg, cmd);
            const auto m = nlohmann::json::parse(read_file(out / (std::string("manifest_") + cmd + ".json")));
            CHECK(m["config_hash"] == cfg.hash());
            CHECK(m["command"] == cmd);
        }
        for (const char* f : {"records.csv", "rejects.csv", "nodes.csv", "edges.csv", "risk_tensor.bin",
                              "diffused.bin", "model.bin", "model.json", "eval_report.json", "predictions.csv",
                              "zones.csv"})
            CHECK_MESSAGE(fs::exists(out / f), f);
        CHECK(fs::exists(out / "maps" / "week_01.geojson"));
        CHECK(fs::exists(out / "maps" / "week_04.geojson"));
        CHECK_FALSE(fs::exists(out / "maps" / "week_05.geojson"));

        const auto report = nlohmann::json::parse(read_file(out / "eval_report.json"));
        CHECK(report["config_hash"] == cfg.hash());
        CHECK(report["methods"].contains("persistence"));

        // Rerunning a stage reproduces its outputs byte for byte.
        const auto records = read_file(out / "records.csv");
        const auto model = read_file(out / "model.bin");
        run_command(cfg, "ingest");
        run_command(cfg, "train");
        CHECK(read_file(out / "records.csv") == records);
        CHECK(read_file(out / "model.bin") == model);
    }
}
