// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "diffusion.hpp"
#include "model.hpp"
#include "risk_features.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace roadrisk {

// Half-open week ranges.
struct WeekRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
    bool operator==(const WeekRange&) const = default;
};

struct Split {
    WeekRange train, val, test;
};

Split split_temporal(std::size_t weeks, std::size_t t_in, std::size_t t_out, double train_frac = 0.6,
                     double val_frac = 0.2);

// Start weeks of every (t_in + t_out) window lying wholly inside `range`, stride 1.
std::vector<std::size_t> window_starts(const WeekRange& range, std::size_t t_in, std::size_t t_out);

// Model input channels kept; the rest are zeroed.
using FeatureMask = std::array<bool, 3>;
inline constexpr FeatureMask kAllFeatures{true, true, true};
std::string feature_mask_name(const FeatureMask& mask);       // "SIE", "SE", ...
std::optional<FeatureMask> feature_mask_from_name(std::string_view name);

// Scaled, diffused tensor plus everything needed to cut windows from it.
struct ForecastData {
    RiskTensor scaled;
    FeatureScaling scaling;
    Split split;
    std::size_t target_feature = 0; // S
    FeatureMask features = kAllFeatures;
};

struct Batch {
    nn::Tensor x; // [B, N, T_in, 3]
    nn::Tensor y; // [B, N, T_out] scaled target
};
Batch make_batch(const ForecastData& data, std::span<const std::size_t> starts, std::size_t t_in, std::size_t t_out);

struct TrainConfig {
    int epochs_main = 50;
    int epochs_finetune = 20;
    double lr_main = 1e-5;
    std::optional<double> lr_finetune; // default lr_main / 10
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 42;
    std::size_t batch = 0; // windows per step; 0 = all
    bool check_finite = false;

    double finetune_lr() const { return lr_finetune.value_or(lr_main / 10.0); }
    void validate() const;
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

class Adam {
public:
    Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) : b1_(beta1), b2_(beta2), eps_(eps) {}
    void step(nn::ParamSet& params, const nn::ParamSet& grads, double lr);
    long steps() const { return t_; }

private:
    double b1_, b2_, eps_;
    long t_ = 0;
    nn::ParamSet m_, v_;
};

struct EpochRecord {
    std::string phase; // "init", "main", "finetune"
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    bool best = false;
};

struct TrainResult {
    nn::ParamSet best_params;
    nn::ParamSet final_params;
    std::vector<EpochRecord> history;
    double best_val_loss = 0.0;
    std::string best_phase;
    int best_epoch = 0;
};

// Mean L1 over windows in eval mode.
double evaluate_loss(const nn::Model& model, const nn::ParamSet& params, const ForecastData& data,
                     std::span<const std::size_t> starts);

// Scaled predictions [B, N, T_out] for the windows.
nn::Tensor predict_windows(const nn::Model& model, const nn::ParamSet& params, const ForecastData& data,
                           std::span<const std::size_t> starts);

TrainResult train(const nn::Model& model, nn::ParamSet params, const ForecastData& data, const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

// ---- metrics

double mae(std::span<const double> y_hat, std::span<const double> y);
double rmse(std::span<const double> y_hat, std::span<const double> y);
struct MapeResult {
    double percent = 0.0;
    double masked_fraction = 0.0;
    std::size_t used = 0;
};
// Cells with |y| <= eps are excluded; AllMasked if none remain.
MapeResult mape(std::span<const double> y_hat, std::span<const double> y, double eps = 1e-8);

struct HorizonBucket {
    std::string name;
    std::size_t first_week = 0; // 1-based, inclusive
    std::size_t last_week = 0;
    double mae = 0.0, rmse = 0.0, mape = 0.0;
};

struct EvalReport {
    std::vector<double> week_mae, week_rmse, week_mape, week_masked_fraction;
    std::vector<HorizonBucket> buckets;
    double overall_mae = 0.0, overall_rmse = 0.0, overall_mape = 0.0, masked_fraction = 0.0;

    const HorizonBucket* bucket(std::string_view name) const;
    nlohmann::json to_json() const;
};

// y_hat, y: [B, N, T_out] in any consistent unit. Weeks whose every cell is
// masked carry NaN MAPE and are left out of their bucket mean.
EvalReport horizon_report(const nn::Tensor& y_hat, const nn::Tensor& y, double eps = 1e-8);
std::vector<double> stability_series(const nn::Tensor& y_hat, const nn::Tensor& y, double eps = 1e-8);

// Maps scaled target values back to the original unit.
nn::Tensor unscale_target(const nn::Tensor& scaled, const ForecastData& data);

// ---- baselines, scaled units, [B, N, T_out]

nn::Tensor baseline_persistence(const ForecastData& data, std::span<const std::size_t> starts, std::size_t t_in,
                                std::size_t t_out);
nn::Tensor baseline_historical_mean(const ForecastData& data, std::span<const std::size_t> starts,
                                    std::size_t t_out);

// ---- ablation support

// Keys (dotted paths) whose values differ between two JSON configs.
std::vector<std::string> config_diff(const nlohmann::json& a, const nlohmann::json& b);

struct ArmResult {
    std::string name;
    nlohmann::json config;
    EvalReport report;          // last full test window
    EvalReport report_all;      // every test window
    double best_val_loss = 0.0;
    double seconds = 0.0;
};

struct AblationResult {
    std::vector<ArmResult> arms;
    bool audit_passed = true;
    std::vector<std::string> audit_notes;
    nlohmann::json to_json() const;
    std::string to_csv(const std::string& config_hash) const;
};

// Builds the data and trains one arm; supplied by the caller so arms can vary
// the factor under study.
using ArmRunner = std::function<ArmResult(const nlohmann::json& arm_config)>;

// Runs each arm config; audits that each differs from `base` only at `factor`.
AblationResult run_ablation(const nlohmann::json& base, const std::string& factor,
                            const std::vector<std::pair<std::string, nlohmann::json>>& arm_values,
                            const ArmRunner& runner);

// Arms SIE, SE, SI, S under the "features" key.
AblationResult run_feature_ablation(const nlohmann::json& base, const ArmRunner& runner);
// One arm per preset under the "diffusion" key.
AblationResult run_diffusion_ablation(const nlohmann::json& base, const std::vector<DiffusionConfig>& presets,
                                      const ArmRunner& runner);

} // namespace roadrisk
