// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace roadrisk {

// Splits one CSV line. Double-quoted fields may contain commas and "" escapes;
// embedded newlines are not supported.
std::vector<std::string> split_csv_line(std::string_view line);

std::string csv_escape(std::string_view field);

// Line-oriented reader over a CSV stream with a header row. Blank lines and
// lines starting with '#' are skipped but still counted, so line() always
// reports the physical 1-based line number.
class CsvReader {
public:
    explicit CsvReader(std::istream& in);

    const std::vector<std::string>& header() const { return header_; }
    std::optional<std::size_t> column(std::string_view name) const;
    std::size_t require_column(std::string_view name) const;

    bool next(std::vector<std::string>& fields);
    std::size_t line() const { return line_; }

private:
    std::istream& in_;
    std::vector<std::string> header_;
    std::unordered_map<std::string, std::size_t> index_;
    std::size_t line_ = 0;
};

// Reads a whole artifact CSV into memory, skipping comment lines.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const;
};

CsvTable read_csv_table(const std::filesystem::path& path);

} // namespace roadrisk
