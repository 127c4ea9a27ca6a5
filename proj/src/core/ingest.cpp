// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#include "ingest.hpp"

#include "csv.hpp"
#include "error.hpp"
#include "util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace roadrisk {

const std::vector<std::string>& CsvSchema::logical_columns() {
    static const std::vector<std::string> cols{
        "Accident_Index",
        "Date",
        "Longitude",
        "Latitude",
        "Accident_Severity",
        "Number_of_Casualties",
        "Road_Type",
        "Speed_limit",
        "Junction_Control",
        "Pedestrian_Crossing-Human_Control",
        "Pedestrian_Crossing-Physical_Facilities",
        "Light_Conditions",
        "Weather_Conditions",
        "Road_Surface_Conditions",
    };
    return cols;
}

std::string CsvSchema::physical(const std::string& logical) const {
    auto it = columns.find(logical);
    return it == columns.end() ? logical : it->second;
}

namespace {

enum Col : std::size_t {
    kId,
    kDate,
    kLon,
    kLat,
    kSeverity,
    kCasualties,
    kRoadType,
    kSpeed,
    kJunction,
    kHuman,
    kPhysical,
    kLight,
    kWeather,
    kSurface,
    kColumnCount
};

} // namespace

ParseResult parse_accident_csv(std::istream& in, const CsvSchema& schema) {
    CsvReader reader(in);
    const auto& logical = CsvSchema::logical_columns();
    std::vector<std::size_t> idx(kColumnCount);
    for (std::size_t c = 0; c < kColumnCount; ++c) {
        const std::string name = schema.physical(logical[c]);
        auto col = reader.column(name);
        if (!col) fail(ErrorKind::Data, "MissingColumn", name);
        idx[c] = *col;
    }

    ParseResult result;
    std::vector<std::string> f;
    while (reader.next(f)) {
        ++result.rows_seen;
        auto reject = [&](std::string reason) { result.rejects.push_back({reader.line(), std::move(reason)}); };
        if (f.size() < reader.header().size()) {
            reject("expected " + std::to_string(reader.header().size()) + " fields, got " + std::to_string(f.size()));
            continue;
        }
        AccidentRecord r;
        r.id = std::string(trim(f[idx[kId]]));
        if (r.id.empty()) r.id = "line" + std::to_string(reader.line());

        auto date = parse_date(f[idx[kDate]]);
        if (!date) {
            reject("unparseable date '" + f[idx[kDate]] + "'");
            continue;
        }
        r.date = *date;

        auto lon = parse_double(f[idx[kLon]]);
        auto lat = parse_double(f[idx[kLat]]);
        if (!lon || !lat || !std::isfinite(*lon) || !std::isfinite(*lat)) {
            reject("unparseable coordinates");
            continue;
        }
        if (*lat < -90.0 || *lat > 90.0 || *lon < -180.0 || *lon > 180.0) {
            reject("coordinates out of range");
            continue;
        }
        r.lon = *lon;
        r.lat = *lat;

        auto sev = parse_int(f[idx[kSeverity]]);
        if (!sev || *sev < 1 || *sev > 3) {
            reject("severity not in {1,2,3}");
            continue;
        }
        r.severity = static_cast<int>(*sev);

        auto cas = parse_int(f[idx[kCasualties]]);
        if (!cas || *cas < 1) {
            reject("casualty count must be >= 1");
            continue;
        }
        r.casualties = static_cast<int>(*cas);

        auto speed = parse_double(f[idx[kSpeed]]);
        r.speed_limit = (speed && *speed >= 0.0) ? *speed : schema.default_speed_limit;

        r.road_type = parse_category<RoadType>(f[idx[kRoadType]]);
        r.junction_control = parse_category<JunctionControl>(f[idx[kJunction]]);
        r.ped_human_control = parse_category<HumanControl>(f[idx[kHuman]]);
        r.ped_physical_facility = parse_category<PhysicalFacility>(f[idx[kPhysical]]);
        r.light = parse_category<LightCondition>(f[idx[kLight]]);
        r.weather = parse_category<WeatherCondition>(f[idx[kWeather]]);
        r.surface = parse_category<SurfaceCondition>(f[idx[kSurface]]);
        result.records.push_back(std::move(r));
    }

    if (result.rows_seen > 0 && 2 * result.rejects.size() > result.rows_seen) {
        fail(ErrorKind::Data, "TooManyRejects",
             std::to_string(result.rejects.size()) + " of " + std::to_string(result.rows_seen) +
                 " rows rejected; first: line " + std::to_string(result.rejects.front().line) + ": " +
                 result.rejects.front().reason);
    }
    return result;
}

ParseResult parse_accident_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::MissingArtifact, "MissingArtifact", path.string());
    return parse_accident_csv(in, schema);
}

std::string rejects_to_csv(std::span<const RejectedRow> rejects, const std::string& config_hash) {
    std::ostringstream out;
    if (!config_hash.empty()) out << "# config_hash=" << config_hash << '\n';
    out << "line,reason\n";
    for (const auto& r : rejects) out << r.line << ',' << csv_escape(r.reason) << '\n';
    return out.str();
}

std::string records_to_csv(std::span<const AccidentRecord> records, const std::string& config_hash) {
    std::ostringstream out;
    if (!config_hash.empty()) out << "# config_hash=" << config_hash << '\n';
    const auto& cols = CsvSchema::logical_columns();
    for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
    out << '\n';
    for (const auto& r : records) {
        out << csv_escape(r.id) << ',' << format_date(r.date) << ',' << format_double(r.lon) << ','
            << format_double(r.lat) << ',' << r.severity << ',' << r.casualties << ','
            << category_code(r.road_type) << ',' << format_double(r.speed_limit) << ','
            << category_code(r.junction_control) << ',' << category_code(r.ped_human_control) << ','
            << category_code(r.ped_physical_facility) << ',' << category_code(r.light) << ','
            << category_code(r.weather) << ',' << category_code(r.surface) << '\n';
    }
    return out.str();
}

void RegionSpec::validate() const {
    if (!(lon_min < lon_max) || !(lat_min < lat_max))
        fail(ErrorKind::Config, "InvalidRegion", "bounding box must satisfy min < max for region '" + name + "'");
    if (end < start) fail(ErrorKind::Config, "InvalidRegion", "period start after end for region '" + name + "'");
}

bool RegionSpec::contains(const AccidentRecord& r) const {
    return r.lon >= lon_min && r.lon <= lon_max && r.lat >= lat_min && r.lat <= lat_max && r.date >= start &&
           r.date <= end;
}

std::vector<AccidentRecord> filter_region(std::span<const AccidentRecord> records, const RegionSpec& region) {
    region.validate();
    std::vector<AccidentRecord> out;
    for (const auto& r : records)
        if (region.contains(r)) out.push_back(r);
    return out;
}

std::vector<double> AggregatedSeries::network_totals() const {
    std::vector<double> totals(index.size(), 0.0);
    for (std::size_t p = 0; p < index.size(); ++p)
        for (std::size_t n = 0; n < nodes; ++n) totals[p] += at(p, n);
    return totals;
}

double AggregatedSeries::total() const {
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum;
}

AggregatedSeries aggregate_temporal(std::span<const AccidentRecord> records, std::span<const int> node_of_record,
                                    std::size_t num_nodes, Granularity granularity, Date first, Date last) {
    if (node_of_record.size() != records.size())
        fail(ErrorKind::Data, "UnassignedRecord",
             "node assignment covers " + std::to_string(node_of_record.size()) + " of " +
                 std::to_string(records.size()) + " records");
    AggregatedSeries series;
    series.granularity = granularity;
    series.index = period_range(first, last, granularity);
    series.nodes = num_nodes;
    series.values.assign(series.index.size() * num_nodes, 0.0);
    if (series.index.empty()) return series;

    for (std::size_t k = 0; k < records.size(); ++k) {
        const int node = node_of_record[k];
        if (node < 0 || static_cast<std::size_t>(node) >= num_nodes)
            fail(ErrorKind::Data, "UnassignedRecord", "record " + records[k].id + " has no node");
        const Date start = period_start(records[k].date, granularity);
        auto it = std::lower_bound(series.index.begin(), series.index.end(), start);
        if (it == series.index.end() || *it != start || records[k].date < first || records[k].date > last)
            fail(ErrorKind::Data, "OutOfPeriod", "record " + records[k].id + " dated " +
                                                     format_date(records[k].date) + " is outside the period");
        const auto p = static_cast<std::size_t>(it - series.index.begin());
        series.values[p * num_nodes + static_cast<std::size_t>(node)] += 1.0;
    }
    return series;
}

SnrResult snr(const AggregatedSeries& series) {
    const auto totals = series.network_totals();
    if (totals.size() < 2)
        fail(ErrorKind::InvalidArgument, "InsufficientPeriods", "SNR needs at least two periods");
    SnrResult r;
    r.periods = totals.size();
    for (double v : totals) r.mean += v;
    r.mean /= static_cast<double>(totals.size());
    double ss = 0.0;
    for (double v : totals) ss += (v - r.mean) * (v - r.mean);
    r.sd = std::sqrt(ss / static_cast<double>(totals.size() - 1));
    if (r.sd == 0.0) {
        r.zero_variance = true;
        r.value = std::numeric_limits<double>::infinity();
        log_warning(std::string("zero variance in ") + std::string(granularity_name(series.granularity)) +
                    " totals; SNR reported as +inf");
        return r;
    }
    r.value = r.mean / r.sd;
    return r;
}

} // namespace roadrisk
