// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "diffusion.hpp"
#include "model.hpp"
#include "run_config.hpp"
#include "spatial_graph.hpp"
#include "train_eval.hpp"

#include <json.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace roadrisk {

// Subcommand names in pipeline order.
const std::vector<std::string>& command_names();

// Runs one subcommand: reads its declared inputs from the output directory
// (or the data file for `ingest`), writes its outputs and a manifest there.
void run_command(const RunConfig& cfg, std::string_view command);

// Writes the synthetic fixture CSV to `path`.
void write_synthetic_fixture(const std::filesystem::path& path, std::uint64_t seed);

nn::Tensor dense_adjacency(const SpatialGraph& graph);

// Diffuses the raw tensor, fits scaling on the training split and applies it.
ForecastData prepare_forecast(const RiskTensor& raw, const SpatialGraph& graph, const DiffusionConfig& diffusion,
                              const nn::ModelConfig& model, const FeatureMask& features);

// Trains from scratch and evaluates on the test split. Arm configs use the
// layout of RunConfig::to_json().
ArmResult train_and_evaluate_arm(const RiskTensor& raw, const SpatialGraph& graph, const nlohmann::json& arm);

struct ForecastEvaluation {
    EvalReport last_window;
    EvalReport all_windows;
};
// Reports in original units over the test split: the last full window and all windows.
ForecastEvaluation evaluate_predictions(const ForecastData& data, const nn::Tensor& scaled_pred,
                                        std::span<const std::size_t> starts, std::size_t t_in, double eps);

} // namespace roadrisk
