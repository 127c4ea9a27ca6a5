// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#include "diffusion.hpp"

#include "error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace roadrisk {

using nlohmann::json;

void DiffusionConfig::validate() const {
    for (double a : alpha)
        if (!(a >= 0.0 && a <= 1.0)) fail(ErrorKind::Config, "InvalidDiffusion", name + ": alpha must lie in [0,1]");
    for (int l : iters)
        if (l < 0) fail(ErrorKind::Config, "InvalidDiffusion", name + ": iterations must be >= 0");
    if (!(beta >= 0.0 && beta <= 1.0)) fail(ErrorKind::Config, "InvalidDiffusion", name + ": beta must lie in [0,1]");
}

json DiffusionConfig::to_json() const {
    return {{"name", name}, {"alpha", alpha}, {"iters", iters}, {"beta", beta}, {"fuse_each_step", fuse_each_step}};
}

DiffusionConfig DiffusionConfig::from_json(const json& j) {
    DiffusionConfig c;
    c.name = j.value("name", c.name);
    c.alpha = j.at("alpha").get<std::array<double, 3>>();
    c.iters = j.at("iters").get<std::array<int, 3>>();
    c.beta = j.value("beta", c.beta);
    c.fuse_each_step = j.value("fuse_each_step", false);
    c.validate();
    return c;
}

const std::vector<DiffusionConfig>& diffusion_presets() {
    static const std::vector<DiffusionConfig> presets{
        {"No_Diffusion", {0.0, 0.0, 0.0}, {0, 0, 0}, 0.7, false},
        {"Uniform_Weak", {0.1, 0.1, 0.1}, {1, 1, 1}, 0.7, false},
        {"Uniform_Medium", {0.2, 0.2, 0.2}, {1, 1, 1}, 0.7, false},
        {"Uniform_Strong", {0.3, 0.3, 0.3}, {2, 2, 2}, 0.7, false},
        {"Differentiated_Current", {0.2, 0.2, 0.2}, {1, 1, 1}, 0.7, false},
        {"Differentiated_A", {0.3, 0.1, 0.25}, {2, 1, 2}, 0.7, false},
        {"Differentiated_B", {0.25, 0.15, 0.3}, {1, 1, 2}, 0.7, false},
        {"Over_Diffusion", {0.5, 0.4, 0.4}, {3, 3, 3}, 0.7, false},
    };
    return presets;
}

std::optional<DiffusionConfig> find_diffusion_preset(const std::string& name) {
    for (const auto& p : diffusion_presets())
        if (p.name == name) return p;
    return std::nullopt;
}

namespace {

void diffusion_step(std::vector<double>& x, std::vector<double>& ax, const SparseMatrix& a_norm, double alpha) {
    a_norm.multiply(x, ax);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = (1.0 - alpha) * x[i] + alpha * ax[i];
}

} // namespace

std::vector<double> diffuse_feature(std::span<const double> x, const SparseMatrix& a_norm, double alpha, int iters) {
    if (x.size() != a_norm.size())
        fail(ErrorKind::InvalidArgument, "ShapeMismatch",
             "feature vector has " + std::to_string(x.size()) + " nodes, graph has " + std::to_string(a_norm.size()));
    if (!(alpha >= 0.0 && alpha <= 1.0) || iters < 0)
        fail(ErrorKind::InvalidArgument, "InvalidDiffusion", "alpha in [0,1] and iters >= 0 required");
    std::vector<double> cur(x.begin(), x.end());
    if (alpha == 0.0 || iters == 0) return cur;
    std::vector<double> ax(cur.size());
    for (int l = 0; l < iters; ++l) diffusion_step(cur, ax, a_norm, alpha);
    return cur;
}

std::vector<double> fuse(std::span<const double> diffused, std::span<const double> original, double beta) {
    if (diffused.size() != original.size())
        fail(ErrorKind::InvalidArgument, "ShapeMismatch", "fuse operands differ in length");
    std::vector<double> out(diffused.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = beta * diffused[i] + (1.0 - beta) * original[i];
    return out;
}

RiskTensor apply_diffusion(const RiskTensor& tensor, const SparseMatrix& a_norm, const DiffusionConfig& cfg) {
    cfg.validate();
    const std::size_t W = tensor.num_weeks(), N = tensor.num_nodes();
    if (N != a_norm.size())
        fail(ErrorKind::Data, "ShapeMismatch",
             "tensor has " + std::to_string(N) + " nodes, graph has " + std::to_string(a_norm.size()));
    RiskTensor out = tensor;
    std::vector<double> original(N), ax(N);
    for (std::size_t t = 0; t < W; ++t) {
        for (std::size_t f = 0; f < kRiskFeatures; ++f) {
            // A zero-strength feature passes through untouched; fusing x with
            // itself would only add rounding noise.
            if (cfg.alpha[f] == 0.0 || cfg.iters[f] == 0) continue;
            for (std::size_t i = 0; i < N; ++i) original[i] = tensor.at(t, i, f);
            std::vector<double> result;
            if (cfg.fuse_each_step) {
                result = original;
                for (int l = 0; l < cfg.iters[f]; ++l) {
                    diffusion_step(result, ax, a_norm, cfg.alpha[f]);
                    result = fuse(result, original, cfg.beta);
                }
            } else {
                result = fuse(diffuse_feature(original, a_norm, cfg.alpha[f], cfg.iters[f]), original, cfg.beta);
            }
            for (std::size_t i = 0; i < N; ++i) out.at(t, i, f) = result[i];
        }
    }
    return out;
}

FeatureScaling FeatureScaling::fit(const RiskTensor& tensor, std::size_t week_begin, std::size_t week_end) {
    if (week_begin >= week_end || week_end > tensor.num_weeks())
        fail(ErrorKind::InvalidArgument, "InvalidRange", "scaling needs a non-empty week range");
    FeatureScaling s;
    s.min.fill(std::numeric_limits<double>::infinity());
    s.max.fill(-std::numeric_limits<double>::infinity());
    for (std::size_t t = week_begin; t < week_end; ++t)
        for (std::size_t i = 0; i < tensor.num_nodes(); ++i)
            for (std::size_t f = 0; f < kRiskFeatures; ++f) {
                const double v = tensor.at(t, i, f);
                if (!std::isfinite(v)) fail(ErrorKind::Numeric, "NonFinite", "non-finite value in risk tensor");
                s.min[f] = std::min(s.min[f], v);
                s.max[f] = std::max(s.max[f], v);
            }
    return s;
}

RiskTensor FeatureScaling::apply(const RiskTensor& tensor) const {
    RiskTensor out = tensor;
    for (std::size_t t = 0; t < tensor.num_weeks(); ++t)
        for (std::size_t i = 0; i < tensor.num_nodes(); ++i)
            for (std::size_t f = 0; f < kRiskFeatures; ++f) {
                const double range = max[f] - min[f];
                out.at(t, i, f) = range > 0.0 ? (tensor.at(t, i, f) - min[f]) / range : 0.0;
            }
    return out;
}

double FeatureScaling::invert_value(double scaled, std::size_t feature) const {
    const double range = max[feature] - min[feature];
    return range > 0.0 ? min[feature] + scaled * range : min[feature];
}

RiskTensor FeatureScaling::invert(const RiskTensor& tensor) const {
    RiskTensor out = tensor;
    for (std::size_t t = 0; t < tensor.num_weeks(); ++t)
        for (std::size_t i = 0; i < tensor.num_nodes(); ++i)
            for (std::size_t f = 0; f < kRiskFeatures; ++f) out.at(t, i, f) = invert_value(tensor.at(t, i, f), f);
    return out;
}

json FeatureScaling::to_json() const { return {{"min", min}, {"max", max}}; }

FeatureScaling FeatureScaling::from_json(const json& j) {
    FeatureScaling s;
    s.min = j.at("min").get<std::array<double, 3>>();
    s.max = j.at("max").get<std::array<double, 3>>();
    return s;
}

} // namespace roadrisk
