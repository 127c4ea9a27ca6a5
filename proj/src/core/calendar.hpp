// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace roadrisk {

using Date = std::chrono::sys_days;

enum class Granularity { Daily, Weekly, Monthly };

std::string_view granularity_name(Granularity g);

// Accepts DD/MM/YYYY (STATS19 legacy) and YYYY-MM-DD.
std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date date);

struct IsoWeek {
    int year = 0;
    unsigned week = 0;
    auto operator<=>(const IsoWeek&) const = default;
};

IsoWeek iso_week(Date date);
std::string iso_week_label(Date date);
Date iso_week_start(Date date);
Date month_start(Date date);

// First day of the period containing `date`.
Date period_start(Date date, Granularity g);
Date next_period(Date start, Granularity g);

// Start dates of every period that intersects [first, last], in order.
std::vector<Date> period_range(Date first, Date last, Granularity g);

std::string period_label(Date start, Granularity g);

} // namespace roadrisk
