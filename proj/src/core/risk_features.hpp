// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "accident.hpp"
#include "calendar.hpp"

#include <json.hpp>

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

namespace roadrisk {

// Risk weights for the three dimensions. Unknown categories weigh
// `unknown_default` in every table.
struct WeightTables {
    std::array<double, 3> severity{3.0, 2.0, 1.0}; // indexed by severity code - 1
    std::map<RoadType, double> road;
    std::map<HumanControl, double> human_control;
    std::map<PhysicalFacility, double> physical_facility;
    std::map<LightCondition, double> light;
    std::map<JunctionControl, double> junction_control;
    std::map<SurfaceCondition, double> surface;
    std::map<WeatherCondition, double> weather;
    double unknown_default = 0.5;

    static WeightTables standard();
    static WeightTables from_json(const nlohmann::json& j);
    static WeightTables load(const std::filesystem::path& path);
    nlohmann::json to_json() const;

    // Throws Config/InvalidWeightTable unless every table is total and positive.
    void validate() const;

    double severity_of(int severity_code) const;
    double of(RoadType v) const;
    double of(HumanControl v) const;
    double of(PhysicalFacility v) const;
    double of(LightCondition v) const;
    double of(JunctionControl v) const;
    double of(SurfaceCondition v) const;
    double of(WeatherCondition v) const;
};

enum class TemporalWeighting { SameWeek, CausalGaussian };

struct TemporalWeightConfig {
    TemporalWeighting mode = TemporalWeighting::SameWeek;
    double tau = 2.0; // weeks, CausalGaussian only
};

// omega_sev = severity weight * road weight * (0.5 + v / 120).
double severity_weight(const WeightTables& w, int severity, RoadType road, double speed_limit_mph);

double temporal_weight(long week, long accident_week, const TemporalWeightConfig& cfg);

// Per-record infrastructure risk: mean of the four infrastructure weights.
double infrastructure_risk(const WeightTables& w, const AccidentRecord& r);
// Per-record environmental risk: mean of the surface and weather weights.
double environmental_risk(const WeightTables& w, const AccidentRecord& r);

// S at one (node, week): sum over the node's accidents of
// ln(C + 1) * omega_sev * omega_temp. accident_weeks[k] is the week index of
// records[k].
double traffic_safety_risk(const WeightTables& w, const TemporalWeightConfig& cfg, long week,
                           std::span<const AccidentRecord> records, std::span<const long> accident_weeks);

inline constexpr std::size_t kRiskFeatures = 3;
enum RiskFeature : std::size_t { kTrafficSafety = 0, kInfrastructure = 1, kEnvironmental = 2 };

// W x N x 3 values, week-major, feature axis ordered (S, I, E).
struct RiskTensor {
    std::vector<Date> weeks;
    std::vector<int> node_ids;
    std::vector<double> values;

    RiskTensor() = default;
    RiskTensor(std::vector<Date> weeks_, std::vector<int> node_ids_);

    std::size_t num_weeks() const { return weeks.size(); }
    std::size_t num_nodes() const { return node_ids.size(); }
    double& at(std::size_t t, std::size_t i, std::size_t f) { return values[(t * num_nodes() + i) * kRiskFeatures + f]; }
    double at(std::size_t t, std::size_t i, std::size_t f) const {
        return values[(t * num_nodes() + i) * kRiskFeatures + f];
    }
};

// weeks: ISO-week start dates covering the study period. Throws
// Data/ShapeMismatch when a record's node is outside [0, num_nodes) and
// Data/OutOfPeriod when its week is not in `weeks`.
RiskTensor build_risk_tensor(const WeightTables& w, const TemporalWeightConfig& cfg,
                             std::span<const AccidentRecord> records, std::span<const int> node_of_record,
                             std::span<const int> node_ids, std::span<const Date> weeks);

// Flat binary: W, N, F as little-endian uint32 then W*N*F little-endian
// float64 values, week-major. The JSON sidecar carries week labels, node ids
// and caller-supplied metadata under "meta".
void save_risk_tensor(const RiskTensor& tensor, const std::filesystem::path& bin_path,
                      const std::filesystem::path& json_path, const nlohmann::json& meta = {});
RiskTensor load_risk_tensor(const std::filesystem::path& bin_path, const std::filesystem::path& json_path,
                            nlohmann::json* meta = nullptr);

} // namespace roadrisk
