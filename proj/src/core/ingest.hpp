// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "accident.hpp"
#include "calendar.hpp"

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace roadrisk {

// Maps the logical STATS19 column names onto whatever a particular file
// variant calls them. Unmapped logical names are looked up verbatim.
struct CsvSchema {
    std::map<std::string, std::string> columns;
    double default_speed_limit = 30.0; // used when Speed_limit is blank or -1

    static const std::vector<std::string>& logical_columns();
    std::string physical(const std::string& logical) const;
};

struct RejectedRow {
    std::size_t line = 0;
    std::string reason;
};

struct ParseResult {
    std::vector<AccidentRecord> records;
    std::vector<RejectedRow> rejects;
    std::size_t rows_seen = 0;
};

// Rows with unusable coordinates, dates, severity or casualty counts are
// reported in `rejects`. Throws Data/TooManyRejects when more than half of
// the rows are rejected and Data/MissingColumn for an absent column.
ParseResult parse_accident_csv(std::istream& in, const CsvSchema& schema);
ParseResult parse_accident_csv(const std::filesystem::path& path, const CsvSchema& schema);

std::string rejects_to_csv(std::span<const RejectedRow> rejects, const std::string& config_hash = {});
// Canonical artifact form: logical column names, numeric STATS19 codes,
// ISO dates. Parses back through parse_accident_csv with an empty schema.
std::string records_to_csv(std::span<const AccidentRecord> records, const std::string& config_hash = {});

struct RegionSpec {
    std::string name;
    double lon_min = -180.0;
    double lat_min = -90.0;
    double lon_max = 180.0;
    double lat_max = 90.0;
    Date start{};
    Date end{};

    void validate() const;
    bool contains(const AccidentRecord& r) const;
};

std::vector<AccidentRecord> filter_region(std::span<const AccidentRecord> records, const RegionSpec& region);

struct AggregatedSeries {
    Granularity granularity = Granularity::Weekly;
    std::vector<Date> index;    // period start dates, strictly increasing, gap free
    std::size_t nodes = 0;
    std::vector<double> values; // period-major: values[p * nodes + n]

    double at(std::size_t period, std::size_t node) const { return values[period * nodes + node]; }
    std::vector<double> network_totals() const;
    double total() const;
};

// Counts accidents per (node, period) over every period intersecting
// [first, last]. node_of_record[k] is the node of records[k].
AggregatedSeries aggregate_temporal(std::span<const AccidentRecord> records, std::span<const int> node_of_record,
                                    std::size_t num_nodes, Granularity granularity, Date first, Date last);

struct SnrResult {
    double value = 0.0; // +inf when the totals have zero variance
    double mean = 0.0;
    double sd = 0.0;
    std::size_t periods = 0;
    bool zero_variance = false;
};

// mean / sample standard deviation of the network-wide per-period totals.
SnrResult snr(const AggregatedSeries& series);

} // namespace roadrisk
