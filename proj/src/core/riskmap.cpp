// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#include "riskmap.hpp"

#include "error.hpp"
#include "util.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace roadrisk {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 6> kZoneLabels{"NoRisk", "VeryLow", "Low", "Medium", "High", "VeryHigh"};

} // namespace

std::string_view zone_label(Zone z) { return kZoneLabels[static_cast<std::size_t>(z)]; }

std::optional<Zone> zone_from_label(std::string_view label) {
    for (std::size_t i = 0; i < kZoneLabels.size(); ++i)
        if (kZoneLabels[i] == label) return static_cast<Zone>(i);
    return std::nullopt;
}

ZoneMap classify_zones(std::string week, std::span<const double> predictions) {
    ZoneMap m;
    m.week = std::move(week);
    m.values.assign(predictions.begin(), predictions.end());
    m.zones.assign(predictions.size(), Zone::NoRisk);
    m.percentile.assign(predictions.size(), 0.0);
    std::vector<double> positive;
    for (double v : predictions) {
        if (!std::isfinite(v)) fail(ErrorKind::Numeric, "NonFinite", "prediction is not finite");
        if (v > kZeroRiskThreshold) positive.push_back(v);
    }
    std::sort(positive.begin(), positive.end());
    const std::size_t total = positive.size();
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double v = predictions[i];
        if (v <= kZeroRiskThreshold) continue;
        const auto below = static_cast<std::size_t>(std::lower_bound(positive.begin(), positive.end(), v) - positive.begin());
        m.zones[i] = static_cast<Zone>(1 + (5 * below) / total);
        m.percentile[i] = 100.0 * static_cast<double>(below) / static_cast<double>(total);
    }
    return m;
}

json zone_map_geojson(const ZoneMap& map, std::span<const GraphNode> nodes, const std::string& config_hash) {
    if (nodes.size() != map.values.size())
        fail(ErrorKind::Data, "ShapeMismatch", "zone map and graph disagree on the node count");
    json features = json::array();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        features.push_back({{"type", "Feature"},
                            {"geometry", {{"type", "Point"}, {"coordinates", {nodes[i].centroid.lon, nodes[i].centroid.lat}}}},
                            {"properties",
                             {{"node_id", nodes[i].id},
                              {"week", map.week},
                              {"zone", static_cast<int>(map.zones[i])},
                              {"zone_label", std::string(zone_label(map.zones[i]))},
                              {"value", map.values[i]},
                              {"percentile", map.percentile[i]}}}});
    }
    return {{"type", "FeatureCollection"}, {"config_hash", config_hash}, {"week", map.week}, {"features", features}};
}

void export_geojson(const ZoneMap& map, std::span<const GraphNode> nodes, const std::filesystem::path& path,
                    const std::string& config_hash) {
    write_file(path, zone_map_geojson(map, nodes, config_hash).dump(1) + "\n");
}

namespace {

void check_position(const json& pos, const std::string& where, std::vector<std::string>& out) {
    if (!pos.is_array() || pos.size() < 2 || pos.size() > 3) {
        out.push_back(where + ": a position is an array of 2 or 3 numbers");
        return;
    }
    for (const auto& v : pos)
        if (!v.is_number()) {
            out.push_back(where + ": position members must be numbers");
            return;
        }
    const double lon = pos[0].get<double>(), lat = pos[1].get<double>();
    if (!(lon >= -180.0 && lon <= 180.0)) out.push_back(where + ": longitude out of range");
    if (!(lat >= -90.0 && lat <= 90.0)) out.push_back(where + ": latitude out of range");
}

void check_bbox(const json& obj, const std::string& where, std::vector<std::string>& out) {
    if (!obj.contains("bbox")) return;
    const auto& b = obj.at("bbox");
    if (!b.is_array() || b.size() < 4 || b.size() % 2 != 0) out.push_back(where + ": bbox must hold 2n numbers");
}

void check_geometry(const json& g, const std::string& where, std::vector<std::string>& out) {
    if (g.is_null()) return;
    if (!g.is_object() || !g.contains("type") || !g.at("type").is_string()) {
        out.push_back(where + ": geometry must be null or an object with a type");
        return;
    }
    const std::string type = g.at("type").get<std::string>();
    check_bbox(g, where, out);
    if (type == "GeometryCollection") {
        if (!g.contains("geometries") || !g.at("geometries").is_array())
            out.push_back(where + ": GeometryCollection needs a geometries array");
        else
            for (std::size_t i = 0; i < g.at("geometries").size(); ++i)
                check_geometry(g.at("geometries")[i], where + ".geometries[" + std::to_string(i) + "]", out);
        return;
    }
    static const std::array<std::string_view, 6> kinds{"Point", "MultiPoint", "LineString", "MultiLineString",
                                                        "Polygon", "MultiPolygon"};
    if (std::find(kinds.begin(), kinds.end(), type) == kinds.end()) {
        out.push_back(where + ": unknown geometry type " + type);
        return;
    }
    if (!g.contains("coordinates")) {
        out.push_back(where + ": geometry lacks coordinates");
        return;
    }
    const json& c = g.at("coordinates");
    if (type == "Point") {
        check_position(c, where, out);
    } else if (type == "MultiPoint" || type == "LineString") {
        if (!c.is_array() || (type == "LineString" && c.size() < 2)) out.push_back(where + ": malformed " + type);
        else for (const auto& p : c) check_position(p, where, out);
    } else {
        // Nested arrays; only the leaves are checked.
        std::vector<const json*> stack{&c};
        while (!stack.empty()) {
            const json* j = stack.back();
            stack.pop_back();
            if (!j->is_array()) {
                out.push_back(where + ": malformed " + type);
                return;
            }
            if (!j->empty() && (*j)[0].is_number()) check_position(*j, where, out);
            else for (const auto& e : *j) stack.push_back(&e);
        }
    }
}

} // namespace

std::vector<std::string> validate_geojson(const json& doc) {
    std::vector<std::string> out;
    if (!doc.is_object() || !doc.contains("type") || !doc.at("type").is_string()) {
        out.push_back("root: a GeoJSON object with a string type is required");
        return out;
    }
    const std::string type = doc.at("type").get<std::string>();
    auto check_feature = [&](const json& f, const std::string& where) {
        if (!f.is_object() || f.value("type", "") != "Feature") {
            out.push_back(where + ": type must be Feature");
            return;
        }
        if (!f.contains("geometry")) out.push_back(where + ": Feature lacks geometry");
        else check_geometry(f.at("geometry"), where + ".geometry", out);
        if (!f.contains("properties")) out.push_back(where + ": Feature lacks properties");
        else if (!f.at("properties").is_object() && !f.at("properties").is_null())
            out.push_back(where + ": properties must be an object or null");
        if (f.contains("id") && !f.at("id").is_string() && !f.at("id").is_number())
            out.push_back(where + ": id must be a string or number");
        for (const char* banned : {"features", "coordinates", "geometries"})
            if (f.contains(banned)) out.push_back(where + ": Feature must not have member " + banned);
        check_bbox(f, where, out);
    };
    if (type == "FeatureCollection") {
        if (!doc.contains("features") || !doc.at("features").is_array()) {
            out.push_back("root: FeatureCollection needs a features array");
            return out;
        }
        for (const char* banned : {"geometry", "properties", "coordinates", "geometries"})
            if (doc.contains(banned)) out.push_back(std::string("root: FeatureCollection must not have member ") + banned);
        check_bbox(doc, "root", out);
        const auto& fs = doc.at("features");
        for (std::size_t i = 0; i < fs.size(); ++i) check_feature(fs[i], "features[" + std::to_string(i) + "]");
    } else if (type == "Feature") {
        check_feature(doc, "root");
    } else {
        check_geometry(doc, "root", out);
    }
    return out;
}

std::vector<ParsedZone> parse_zone_geojson(const json& doc) {
    const auto problems = validate_geojson(doc);
    if (!problems.empty()) fail(ErrorKind::Data, "InvalidGeoJson", problems.front());
    std::vector<ParsedZone> out;
    for (const auto& f : doc.at("features")) {
        const auto& p = f.at("properties");
        ParsedZone z;
        z.node_id = p.at("node_id").get<int>();
        const auto zone = zone_from_label(p.at("zone_label").get<std::string>());
        if (!zone || static_cast<int>(*zone) != p.at("zone").get<int>())
            fail(ErrorKind::Data, "InvalidGeoJson", "zone and zone_label disagree for node " + std::to_string(z.node_id));
        z.zone = *zone;
        z.value = p.at("value").get<double>();
        z.percentile = p.at("percentile").get<double>();
        z.lon = f.at("geometry").at("coordinates")[0].get<double>();
        z.lat = f.at("geometry").at("coordinates")[1].get<double>();
        out.push_back(z);
    }
    std::sort(out.begin(), out.end(), [](const ParsedZone& a, const ParsedZone& b) { return a.node_id < b.node_id; });
    return out;
}

std::string zones_csv(std::span<const ZoneMap> maps, std::span<const GraphNode> nodes, const std::string& config_hash) {
    std::ostringstream s;
    s << "# config_hash=" << config_hash << "\n";
    s << "node_id,week,value,zone,zone_label,percentile\n";
    for (const auto& m : maps) {
        if (m.values.size() != nodes.size())
            fail(ErrorKind::Data, "ShapeMismatch", "zone map and graph disagree on the node count");
        for (std::size_t i = 0; i < nodes.size(); ++i)
            s << nodes[i].id << ',' << m.week << ',' << format_double(m.values[i]) << ','
              << static_cast<int>(m.zones[i]) << ',' << zone_label(m.zones[i]) << ','
              << format_double(m.percentile[i]) << '\n';
    }
    return s.str();
}

} // namespace roadrisk
