// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "risk_features.hpp"
#include "spatial_graph.hpp"

#include <json.hpp>

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace roadrisk {

struct DiffusionConfig {
    std::string name = "custom";
    std::array<double, 3> alpha{0.0, 0.0, 0.0}; // per feature, in [0, 1]
    std::array<int, 3> iters{0, 0, 0};
    double beta = 0.7;          // fusion weight of the diffused signal
    bool fuse_each_step = false; // false: a single fusion after the last step

    void validate() const;
    nlohmann::json to_json() const;
    static DiffusionConfig from_json(const nlohmann::json& j);
};

// The eight ablation presets, in table order.
const std::vector<DiffusionConfig>& diffusion_presets();
std::optional<DiffusionConfig> find_diffusion_preset(const std::string& name);

// iters applications of x <- (1 - alpha) x + alpha * A_norm x.
std::vector<double> diffuse_feature(std::span<const double> x, const SparseMatrix& a_norm, double alpha, int iters);

// beta * diffused + (1 - beta) * original.
std::vector<double> fuse(std::span<const double> diffused, std::span<const double> original, double beta);

RiskTensor apply_diffusion(const RiskTensor& tensor, const SparseMatrix& a_norm, const DiffusionConfig& cfg);

// Per-feature affine map onto [0, 1], fitted on a week range.
struct FeatureScaling {
    std::array<double, 3> min{0.0, 0.0, 0.0};
    std::array<double, 3> max{0.0, 0.0, 0.0};

    static FeatureScaling fit(const RiskTensor& tensor, std::size_t week_begin, std::size_t week_end);
    RiskTensor apply(const RiskTensor& tensor) const;
    RiskTensor invert(const RiskTensor& tensor) const;
    double invert_value(double scaled, std::size_t feature) const;

    nlohmann::json to_json() const;
    static FeatureScaling from_json(const nlohmann::json& j);
};

} // namespace roadrisk
