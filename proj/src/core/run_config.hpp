// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "diffusion.hpp"
#include "ingest.hpp"
#include "model.hpp"
#include "risk_features.hpp"
#include "train_eval.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace roadrisk {

// INI-style run configuration:
//
//   [section]
//   key = value   ; or # comments
//
// Keys are addressed as "section.key". Unknown keys are rejected.
class RunConfig {
public:
    static RunConfig parse(std::string_view text, std::filesystem::path base_dir = ".");
    static RunConfig load(const std::filesystem::path& path);

    // Overrides or adds "section.key"; validates the key.
    void set(const std::string& key, const std::string& value);
    std::optional<std::string> get(const std::string& key) const;
    const std::map<std::string, std::string>& entries() const { return entries_; }

    // FNV-1a over the sorted "section.key=value" lines, 16 hex digits.
    std::string hash() const;
    std::string canonical_text() const;

    std::filesystem::path base_dir() const { return base_dir_; }
    std::filesystem::path data_path() const;
    std::filesystem::path output_dir() const;
    std::optional<std::filesystem::path> weights_path() const;

    RegionSpec region() const;
    CsvSchema schema() const;
    WeightTables weights() const;
    TemporalWeightConfig temporal_weighting() const;
    double cell_size_m() const;
    int graph_k() const;
    std::optional<double> graph_sigma() const;
    DiffusionConfig diffusion() const;
    nn::ModelConfig model() const;
    TrainConfig train() const;
    FeatureMask features() const;
    double mape_eps() const;
    double validation_cell_m() const;
    std::uint64_t seed() const;

    // Structured view used for ablation audits.
    nlohmann::json to_json() const;

private:
    std::string str(const std::string& key, const std::string& fallback) const;
    double num(const std::string& key, double fallback) const;
    long long integer(const std::string& key, long long fallback) const;
    bool flag(const std::string& key, bool fallback) const;
    std::filesystem::path resolve(const std::string& p) const;

    std::map<std::string, std::string> entries_;
    std::filesystem::path base_dir_{"."};
};

} // namespace roadrisk
