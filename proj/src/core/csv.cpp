// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#include "csv.hpp"

#include "error.hpp"
#include "util.hpp"

#include <fstream>

namespace roadrisk {

std::vector<std::string> split_csv_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(std::move(current));
    return fields;
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

CsvReader::CsvReader(std::istream& in) : in_(in) {
    std::string raw;
    while (std::getline(in_, raw)) {
        ++line_;
        auto t = trim(raw);
        if (t.empty() || t.front() == '#') continue;
        header_ = split_csv_line(raw);
        for (auto& h : header_) h = std::string(trim(h));
        // Strip a UTF-8 byte order mark from the first column name.
        if (!header_.empty() && header_[0].rfind("\xEF\xBB\xBF", 0) == 0) header_[0].erase(0, 3);
        for (std::size_t i = 0; i < header_.size(); ++i) index_.emplace(header_[i], i);
        return;
    }
    fail(ErrorKind::Data, "MissingHeader", "CSV input has no header row");
}

std::optional<std::size_t> CsvReader::column(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t CsvReader::require_column(std::string_view name) const {
    auto c = column(name);
    if (!c) fail(ErrorKind::Data, "MissingColumn", std::string(name));
    return *c;
}

bool CsvReader::next(std::vector<std::string>& fields) {
    std::string raw;
    while (std::getline(in_, raw)) {
        ++line_;
        auto t = trim(raw);
        if (t.empty() || t.front() == '#') continue;
        fields = split_csv_line(raw);
        return true;
    }
    return false;
}

std::size_t CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    fail(ErrorKind::Data, "MissingColumn", std::string(name));
}

CsvTable read_csv_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::MissingArtifact, "MissingArtifact", path.string());
    CsvReader reader(in);
    CsvTable table;
    table.header = reader.header();
    std::vector<std::string> fields;
    while (reader.next(fields)) {
        if (fields.size() != table.header.size())
            fail(ErrorKind::Data, "MalformedRow",
                 path.string() + " line " + std::to_string(reader.line()) + ": expected " +
                     std::to_string(table.header.size()) + " fields");
        table.rows.push_back(fields);
    }
    return table;
}

} // namespace roadrisk
