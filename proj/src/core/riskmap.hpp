// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "spatial_graph.hpp"

#include <json.hpp>

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace roadrisk {

enum class Zone { NoRisk = 0, VeryLow = 1, Low = 2, Medium = 3, High = 4, VeryHigh = 5 };

std::string_view zone_label(Zone z);
std::optional<Zone> zone_from_label(std::string_view label);

inline constexpr double kZeroRiskThreshold = 1e-9;

struct ZoneMap {
    std::string week;               // label of the forecast week
    std::vector<double> values;     // per node
    std::vector<Zone> zones;        // per node
    std::vector<double> percentile; // per node, 0 for NoRisk
};

// Values <= 1e-9 are NoRisk. Each remaining value with r positive values
// strictly below it (out of M) gets zone 1 + floor(5 r / M) and percentile
// 100 r / M, so ties share the lower zone.
ZoneMap classify_zones(std::string week, std::span<const double> predictions);

// FeatureCollection of Point features; `config_hash` is a foreign member.
nlohmann::json zone_map_geojson(const ZoneMap& map, std::span<const GraphNode> nodes, const std::string& config_hash);
void export_geojson(const ZoneMap& map, std::span<const GraphNode> nodes, const std::filesystem::path& path,
                    const std::string& config_hash);

// Structural RFC 7946 checks; returns the violations found (empty when valid).
std::vector<std::string> validate_geojson(const nlohmann::json& doc);

// Zones recovered from an exported FeatureCollection, ordered by node_id.
struct ParsedZone {
    int node_id = 0;
    Zone zone = Zone::NoRisk;
    double value = 0.0;
    double percentile = 0.0;
    double lon = 0.0, lat = 0.0;
};
std::vector<ParsedZone> parse_zone_geojson(const nlohmann::json& doc);

// node_id,week,value,zone,zone_label,percentile rows for every map.
std::string zones_csv(std::span<const ZoneMap> maps, std::span<const GraphNode> nodes, const std::string& config_hash);

} // namespace roadrisk
