// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#include "roadrisk/roadrisk.h"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

namespace {

int report(rr_status s) {
    if (s != RR_OK) std::fprintf(stderr, "error: %s\n", rr_last_error());
    return rr_exit_code(s);
}

struct Common {
    std::string config;
    std::vector<std::string> sets;
    std::string out;
};

int run_commands(const Common& c, const std::vector<std::string>& commands) {
    rr_config* cfg = nullptr;
    rr_status s = rr_config_load(c.config.c_str(), &cfg);
    if (s != RR_OK) return report(s);
    for (const auto& kv : c.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
            rr_config_free(cfg);
            return 2;
        }
        s = rr_config_set(cfg, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
        if (s != RR_OK) break;
    }
    if (s == RR_OK && !c.out.empty())
        s = rr_config_set(cfg, "paths.output", std::filesystem::absolute(c.out).string().c_str());
    for (const auto& cmd : commands) {
        if (s != RR_OK) break;
        s = rr_cmd_run(cfg, cmd.c_str());
    }
    rr_config_free(cfg);
    return report(s);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Road traffic risk forecasting pipeline"};
    app.set_version_flag("--version", rr_version());
    app.require_subcommand(1);
    bool verbose = false, quiet = false;
    app.add_flag("-v,--verbose", verbose, "Progress logging on stderr");
    app.add_flag("-q,--quiet", quiet, "Suppress warnings");

    Common common;
    std::vector<std::string> commands;
    for (size_t i = 0; i < rr_command_count(); ++i) commands.emplace_back(rr_command_name(i));

    std::string chosen;
    for (const auto& name : commands) {
        auto* sub = app.add_subcommand(name, "Run the " + name + " stage");
        sub->add_option("-c,--config", common.config, "Run configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("-s,--set", common.sets, "Override a config key (section.key=value)");
        sub->add_option("-o,--out", common.out, "Output directory (overrides paths.output)");
        sub->callback([&chosen, name] { chosen = name; });
    }
    auto* all = app.add_subcommand("all", "Run ingest through map in order");
    all->add_option("-c,--config", common.config, "Run configuration file")->required()->check(CLI::ExistingFile);
    all->add_option("-s,--set", common.sets, "Override a config key (section.key=value)");
    all->add_option("-o,--out", common.out, "Output directory (overrides paths.output)");
    bool with_ablations = false;
    all->add_flag("--ablations", with_ablations, "Include both ablation studies");
    all->callback([&chosen] { chosen = "all"; });

    std::string synth_path;
    std::uint64_t synth_seed = 20260415;
    auto* synth = app.add_subcommand("synth", "Write the seeded synthetic accident CSV");
    synth->add_option("path", synth_path, "Output CSV path")->required();
    synth->add_option("--seed", synth_seed, "Generator seed");
    synth->callback([&chosen] { chosen = "synth"; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    rr_set_log_level(quiet ? 0 : verbose ? 2 : 1);

    if (chosen == "synth") return report(rr_synth_write(synth_path.c_str(), synth_seed));
    if (chosen == "all") {
        std::vector<std::string> seq;
        for (const auto& c : commands)
            if (with_ablations || c.rfind("ablate-", 0) != 0) seq.push_back(c);
        return run_commands(common, seq);
    }
    return run_commands(common, {chosen});
}
