// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#include "risk_features.hpp"

#include "error.hpp"
#include "util.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>

namespace roadrisk {

using nlohmann::json;

WeightTables WeightTables::standard() {
    WeightTables w;
    w.severity = {3.0, 2.0, 1.0};
    w.road = {{RoadType::SingleCarriageway, 1.0},
              {RoadType::OneWay, 1.1},
              {RoadType::DualCarriageway, 1.2},
              {RoadType::SlipRoad, 1.3},
              {RoadType::Roundabout, 1.5}};
    w.human_control = {{HumanControl::SchoolCrossingPatrol, 0.2},
                       {HumanControl::OtherAuthorisedPerson, 0.3},
                       {HumanControl::NoneWithin50m, 0.4}};
    w.physical_facility = {{PhysicalFacility::FootbridgeOrSubway, 0.1},
                           {PhysicalFacility::SignalJunctionPhase, 0.2},
                           {PhysicalFacility::NonJunctionCrossing, 0.3},
                           {PhysicalFacility::ZebraCrossing, 0.35},
                           {PhysicalFacility::CentralRefuge, 0.4},
                           {PhysicalFacility::NoCrossingWithin50m, 0.6}};
    w.light = {{LightCondition::Daylight, 0.2},
               {LightCondition::DarkLit, 0.4},
               {LightCondition::DarkLightingUnknown, 0.6},
               {LightCondition::DarkUnlit, 0.7},
               {LightCondition::DarkNoLighting, 0.8}};
    w.junction_control = {{JunctionControl::AuthorisedPerson, 0.2},
                          {JunctionControl::AutoTrafficSignal, 0.3},
                          {JunctionControl::StopSign, 0.5},
                          {JunctionControl::GiveWayOrUncontrolled, 0.7}};
    w.surface = {{SurfaceCondition::Dry, 0.2},
                 {SurfaceCondition::WetDamp, 0.5},
                 {SurfaceCondition::Snow, 0.7},
                 {SurfaceCondition::Flood, 0.7},
                 {SurfaceCondition::FrostIce, 0.8}};
    w.weather = {{WeatherCondition::FineNoWind, 0.2},
                 {WeatherCondition::FineHighWind, 0.3},
                 {WeatherCondition::RainNoWind, 0.5},
                 {WeatherCondition::FogMist, 0.6},
                 {WeatherCondition::RainHighWind, 0.7},
                 {WeatherCondition::SnowNoWind, 0.7},
                 {WeatherCondition::SnowHighWind, 0.8}};
    w.unknown_default = 0.5;
    return w;
}

namespace {

template <class E> json table_to_json(const std::map<E, double>& table) {
    json j = json::object();
    for (const auto& [k, v] : table) j[std::string(category_name(k))] = v;
    return j;
}

template <class E> std::map<E, double> table_from_json(const json& j, const char* what) {
    if (!j.is_object()) fail(ErrorKind::Config, "InvalidWeightTable", std::string(what) + " must be an object");
    std::map<E, double> out;
    for (const auto& [key, value] : j.items()) {
        auto cat = category_from_name<E>(key);
        if (!cat) fail(ErrorKind::Config, "InvalidWeightTable", std::string(what) + ": unknown category " + key);
        if (!value.is_number())
            fail(ErrorKind::Config, "InvalidWeightTable", std::string(what) + "." + key + " must be numeric");
        if (*cat != E::Unknown) out[*cat] = value.template get<double>();
    }
    return out;
}

template <class E> void check_total(const std::map<E, double>& table, const char* what) {
    for (const auto& c : categories<E>()) {
        if (c.value == E::Unknown) continue;
        auto it = table.find(c.value);
        if (it == table.end())
            fail(ErrorKind::Config, "InvalidWeightTable", std::string(what) + " lacks " + std::string(c.name));
        if (!(it->second > 0.0) || !std::isfinite(it->second))
            fail(ErrorKind::Config, "InvalidWeightTable", std::string(what) + "." + std::string(c.name) + " must be > 0");
    }
}

template <class E> double lookup(const std::map<E, double>& table, E v, double unknown) {
    if (v == E::Unknown) return unknown;
    auto it = table.find(v);
    return it == table.end() ? unknown : it->second;
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
}

void put_f64(std::string& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
}

std::uint32_t get_u32(const std::string& in, std::size_t off) {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[off + b])) << (8 * b);
    return v;
}

double get_f64(const std::string& in, std::size_t off) {
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[off + b])) << (8 * b);
    return std::bit_cast<double>(v);
}

// Order-independent sum: contributions are sorted before accumulation so
// that permuting the input records cannot change a single bit.
double canonical_sum(std::vector<double>& terms) {
    std::sort(terms.begin(), terms.end());
    double s = 0.0;
    for (double t : terms) s += t;
    return s;
}

} // namespace

WeightTables WeightTables::from_json(const json& j) {
    WeightTables w;
    try {
        const auto& sev = j.at("severity");
        for (int s = 1; s <= 3; ++s) w.severity[s - 1] = sev.at(std::to_string(s)).get<double>();
        w.road = table_from_json<RoadType>(j.at("road_type"), "road_type");
        const auto& infra = j.at("infrastructure");
        w.human_control = table_from_json<HumanControl>(infra.at("human_control"), "human_control");
        w.physical_facility = table_from_json<PhysicalFacility>(infra.at("physical_facility"), "physical_facility");
        w.light = table_from_json<LightCondition>(infra.at("light"), "light");
        w.junction_control = table_from_json<JunctionControl>(infra.at("junction_control"), "junction_control");
        const auto& env = j.at("environment");
        w.surface = table_from_json<SurfaceCondition>(env.at("surface"), "surface");
        w.weather = table_from_json<WeatherCondition>(env.at("weather"), "weather");
        w.unknown_default = j.value("unknown_default", 0.5);
    } catch (const json::exception& e) {
        fail(ErrorKind::Config, "InvalidWeightTable", e.what());
    }
    w.validate();
    return w;
}

WeightTables WeightTables::load(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        fail(ErrorKind::Config, "InvalidWeightTable", path.string() + ": " + e.what());
    }
    return from_json(j);
}

json WeightTables::to_json() const {
    json j;
    j["severity"] = {{"1", severity[0]}, {"2", severity[1]}, {"3", severity[2]}};
    j["road_type"] = table_to_json(road);
    j["infrastructure"] = {{"human_control", table_to_json(human_control)},
                           {"physical_facility", table_to_json(physical_facility)},
                           {"light", table_to_json(light)},
                           {"junction_control", table_to_json(junction_control)}};
    j["environment"] = {{"surface", table_to_json(surface)}, {"weather", table_to_json(weather)}};
    j["unknown_default"] = unknown_default;
    return j;
}

void WeightTables::validate() const {
    for (double s : severity)
        if (!(s > 0.0)) fail(ErrorKind::Config, "InvalidWeightTable", "severity weights must be > 0");
    if (!(unknown_default > 0.0)) fail(ErrorKind::Config, "InvalidWeightTable", "unknown_default must be > 0");
    check_total(road, "road_type");
    check_total(human_control, "human_control");
    check_total(physical_facility, "physical_facility");
    check_total(light, "light");
    check_total(junction_control, "junction_control");
    check_total(surface, "surface");
    check_total(weather, "weather");
}

double WeightTables::severity_of(int code) const {
    if (code < 1 || code > 3) fail(ErrorKind::InvalidArgument, "InvalidSeverity", std::to_string(code));
    return severity[static_cast<std::size_t>(code - 1)];
}

double WeightTables::of(RoadType v) const { return lookup(road, v, unknown_default); }
double WeightTables::of(HumanControl v) const { return lookup(human_control, v, unknown_default); }
double WeightTables::of(PhysicalFacility v) const { return lookup(physical_facility, v, unknown_default); }
double WeightTables::of(LightCondition v) const { return lookup(light, v, unknown_default); }
double WeightTables::of(JunctionControl v) const { return lookup(junction_control, v, unknown_default); }
double WeightTables::of(SurfaceCondition v) const { return lookup(surface, v, unknown_default); }
double WeightTables::of(WeatherCondition v) const { return lookup(weather, v, unknown_default); }

double severity_weight(const WeightTables& w, int severity, RoadType road, double speed_limit_mph) {
    if (speed_limit_mph < 0.0) fail(ErrorKind::InvalidArgument, "InvalidSpeed", "speed limit must be >= 0");
    return w.severity_of(severity) * w.of(road) * (0.5 + speed_limit_mph / 120.0);
}

double temporal_weight(long week, long accident_week, const TemporalWeightConfig& cfg) {
    if (week == accident_week) return 1.0;
    if (cfg.mode == TemporalWeighting::SameWeek || week < accident_week) return 0.0;
    if (cfg.tau <= 0.0) return 0.0;
    const double dt = static_cast<double>(week - accident_week);
    return std::exp(-(dt * dt) / (2.0 * cfg.tau * cfg.tau));
}

double infrastructure_risk(const WeightTables& w, const AccidentRecord& r) {
    return (w.of(r.ped_human_control) + w.of(r.ped_physical_facility) + w.of(r.light) + w.of(r.junction_control)) /
           4.0;
}

double environmental_risk(const WeightTables& w, const AccidentRecord& r) {
    return (w.of(r.surface) + w.of(r.weather)) / 2.0;
}

double traffic_safety_risk(const WeightTables& w, const TemporalWeightConfig& cfg, long week,
                           std::span<const AccidentRecord> records, std::span<const long> accident_weeks) {
    if (records.size() != accident_weeks.size())
        fail(ErrorKind::InvalidArgument, "ShapeMismatch", "one week index per record required");
    std::vector<double> terms;
    terms.reserve(records.size());
    for (std::size_t k = 0; k < records.size(); ++k) {
        const double wt = temporal_weight(week, accident_weeks[k], cfg);
        if (wt == 0.0) continue;
        const auto& r = records[k];
        terms.push_back(std::log(static_cast<double>(r.casualties) + 1.0) *
                        severity_weight(w, r.severity, r.road_type, r.speed_limit) * wt);
    }
    return canonical_sum(terms);
}

RiskTensor::RiskTensor(std::vector<Date> weeks_, std::vector<int> node_ids_)
    : weeks(std::move(weeks_)), node_ids(std::move(node_ids_)),
      values(weeks.size() * node_ids.size() * kRiskFeatures, 0.0) {}

RiskTensor build_risk_tensor(const WeightTables& w, const TemporalWeightConfig& cfg,
                             std::span<const AccidentRecord> records, std::span<const int> node_of_record,
                             std::span<const int> node_ids, std::span<const Date> weeks) {
    if (node_of_record.size() != records.size())
        fail(ErrorKind::Data, "ShapeMismatch", "node assignment does not cover every record");
    RiskTensor out({weeks.begin(), weeks.end()}, {node_ids.begin(), node_ids.end()});
    const std::size_t W = weeks.size();
    const std::size_t N = node_ids.size();

    std::vector<std::vector<double>> s_terms(W * N), i_terms(W * N), e_terms(W * N);
    for (std::size_t k = 0; k < records.size(); ++k) {
        const int node = node_of_record[k];
        if (node < 0 || static_cast<std::size_t>(node) >= N)
            fail(ErrorKind::Data, "ShapeMismatch",
                 "record " + records[k].id + " assigned to node " + std::to_string(node) + " outside graph");
        const Date ws = iso_week_start(records[k].date);
        auto it = std::lower_bound(weeks.begin(), weeks.end(), ws);
        if (it == weeks.end() || *it != ws)
            fail(ErrorKind::Data, "OutOfPeriod", "record " + records[k].id + " falls outside the week range");
        const auto tk = static_cast<std::size_t>(it - weeks.begin());
        const auto& r = records[k];
        const double base =
            std::log(static_cast<double>(r.casualties) + 1.0) * severity_weight(w, r.severity, r.road_type, r.speed_limit);
        for (std::size_t t = tk; t < W; ++t) {
            const double wt = temporal_weight(static_cast<long>(t), static_cast<long>(tk), cfg);
            if (wt == 0.0) {
                if (cfg.mode == TemporalWeighting::SameWeek) break;
                continue;
            }
            s_terms[t * N + static_cast<std::size_t>(node)].push_back(base * wt);
        }
        i_terms[tk * N + static_cast<std::size_t>(node)].push_back(infrastructure_risk(w, r));
        e_terms[tk * N + static_cast<std::size_t>(node)].push_back(environmental_risk(w, r));
    }

    for (std::size_t t = 0; t < W; ++t) {
        for (std::size_t i = 0; i < N; ++i) {
            const std::size_t c = t * N + i;
            out.at(t, i, kTrafficSafety) = canonical_sum(s_terms[c]);
            if (!i_terms[c].empty()) {
                out.at(t, i, kInfrastructure) = canonical_sum(i_terms[c]) / static_cast<double>(i_terms[c].size());
                out.at(t, i, kEnvironmental) = canonical_sum(e_terms[c]) / static_cast<double>(e_terms[c].size());
            }
        }
    }
    return out;
}

void save_risk_tensor(const RiskTensor& tensor, const std::filesystem::path& bin_path,
                      const std::filesystem::path& json_path, const json& meta) {
    std::string bin;
    bin.reserve(12 + tensor.values.size() * 8);
    put_u32(bin, static_cast<std::uint32_t>(tensor.num_weeks()));
    put_u32(bin, static_cast<std::uint32_t>(tensor.num_nodes()));
    put_u32(bin, static_cast<std::uint32_t>(kRiskFeatures));
    for (double v : tensor.values) put_f64(bin, v);
    write_file(bin_path, bin);

    json side;
    side["W"] = tensor.num_weeks();
    side["N"] = tensor.num_nodes();
    side["F"] = kRiskFeatures;
    side["feature_order"] = {"traffic_safety", "infrastructure", "environmental"};
    side["layout"] = "week-major float64 little-endian";
    json weeks = json::array();
    for (Date d : tensor.weeks) weeks.push_back(format_date(d));
    side["week_starts"] = weeks;
    side["node_ids"] = tensor.node_ids;
    side["meta"] = meta.is_null() ? json::object() : meta;
    write_file(json_path, side.dump(2) + "\n");
}

RiskTensor load_risk_tensor(const std::filesystem::path& bin_path, const std::filesystem::path& json_path,
                            json* meta) {
    if (!std::filesystem::exists(bin_path)) fail(ErrorKind::MissingArtifact, "MissingArtifact", bin_path.string());
    if (!std::filesystem::exists(json_path)) fail(ErrorKind::MissingArtifact, "MissingArtifact", json_path.string());
    const std::string bin = read_file(bin_path);
    json side;
    try {
        side = json::parse(read_file(json_path));
    } catch (const json::parse_error& e) {
        fail(ErrorKind::Data, "CorruptArtifact", json_path.string() + ": " + e.what());
    }
    if (bin.size() < 12) fail(ErrorKind::Data, "CorruptArtifact", bin_path.string() + " is truncated");
    const std::size_t W = get_u32(bin, 0), N = get_u32(bin, 4), F = get_u32(bin, 8);
    if (F != kRiskFeatures || bin.size() != 12 + W * N * F * 8)
        fail(ErrorKind::Data, "CorruptArtifact", bin_path.string() + " has inconsistent size");

    std::vector<Date> weeks;
    for (const auto& s : side.at("week_starts")) {
        auto d = parse_date(s.get<std::string>());
        if (!d) fail(ErrorKind::Data, "CorruptArtifact", "bad week start in " + json_path.string());
        weeks.push_back(*d);
    }
    auto node_ids = side.at("node_ids").get<std::vector<int>>();
    if (weeks.size() != W || node_ids.size() != N)
        fail(ErrorKind::Data, "ShapeMismatch", json_path.string() + " disagrees with " + bin_path.string());
    RiskTensor t(std::move(weeks), std::move(node_ids));
    for (std::size_t k = 0; k < t.values.size(); ++k) t.values[k] = get_f64(bin, 12 + 8 * k);
    if (meta) *meta = side.value("meta", json::object());
    return t;
}

} // namespace roadrisk
