// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "risk_features.hpp"

#include <json.hpp>

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace roadrisk {

using Stat = std::optional<double>; // nullopt: undefined on this data

std::optional<double> pearson(std::span<const double> x, std::span<const double> y);
// Sample-ACF estimator: sum (x_t - m)(x_{t+1} - m) / sum (x_t - m)^2.
std::optional<double> lag1_autocorrelation(std::span<const double> x);
// 100 * sample sd / mean.
std::optional<double> coefficient_of_variation(std::span<const double> x);

struct CorrelationResult {
    std::array<Stat, 3> pair_r;     // (S,I), (S,E), (I,E)
    std::array<Stat, 3> mean_abs_r; // per dimension, against the other two
    std::size_t active_cells = 0;
    std::vector<std::string> notes;
};
// Pearson r over every (week, node) cell with any nonzero dimension.
CorrelationResult cross_dimension_correlation(const RiskTensor& tensor);

struct TemporalStats {
    std::array<Stat, 3> cv_percent;
    std::array<Stat, 3> lag1;
    std::vector<std::string> notes;
};
// On the per-dimension weekly series of node means.
TemporalStats temporal_stats(const RiskTensor& tensor);

// One-way random-effects ICC from ANOVA mean squares; a negative between-group
// estimate clamps to 0. Groups with fewer than 2 observations are dropped;
// InsufficientGroups if fewer than 2 remain.
struct IccEstimate {
    double icc = 0.0;
    double between = 0.0;
    double within = 0.0;
    std::size_t groups = 0;
    bool clamped = false;
};
IccEstimate icc_oneway(const std::vector<std::vector<double>>& groups);

struct IccResult {
    std::array<Stat, 3> icc;
    std::array<std::size_t, 3> groups{};
    std::vector<std::string> notes;
};
// Cells (nodes) are groups; observations are the weeks in which the cell had
// at least one accident.
IccResult icc_grid(const RiskTensor& cell_tensor);

// R^2 of an OLS fit with intercept, solved through the normal equations.
// A failed Cholesky retries with ridge 1e-8 and sets *ridge_used.
double ols_r2(const std::vector<std::vector<double>>& columns, std::span<const double> target,
              bool* ridge_used = nullptr);

struct R2Result {
    std::array<double, 3> r2{};           // S; S+I; S+I+E
    std::array<double, 2> relative_gain{}; // (r2[k] - r2[k-1]) / r2[0]
    bool ridge_used = false;
    std::size_t rows = 0;
    std::vector<std::string> notes;
};
// Target: accident count of the cell in the following week.
R2Result hierarchical_r2(const RiskTensor& cell_tensor, std::span<const double> counts);

struct ValidationReport {
    CorrelationResult correlation;
    TemporalStats temporal;
    IccResult icc;
    R2Result r2;
    std::size_t cells = 0;
    std::size_t weeks = 0;
    std::size_t records = 0;

    nlohmann::json to_json() const;
    std::string to_csv(const std::string& config_hash) const;
};

// Builds the per-cell weekly tensor on a square grid (metres) and runs every
// statistic.
ValidationReport validate_framework(const WeightTables& weights, const TemporalWeightConfig& tcfg,
                                    std::span<const AccidentRecord> records, std::span<const Date> weeks,
                                    double cell_size_m = 1000.0);

} // namespace roadrisk
