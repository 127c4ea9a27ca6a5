// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#include "calendar.hpp"

#include "util.hpp"

#include <cstdio>

namespace roadrisk {

using namespace std::chrono;

std::string_view granularity_name(Granularity g) {
    switch (g) {
    case Granularity::Daily: return "Daily";
    case Granularity::Weekly: return "Weekly";
    case Granularity::Monthly: return "Monthly";
    }
    return "?";
}

std::optional<Date> parse_date(std::string_view text) {
    text = trim(text);
    auto parts = split(text, text.find('/') != std::string_view::npos ? '/' : '-');
    if (parts.size() != 3) return std::nullopt;
    // A trailing time component ("2012-03-04 00:00") is tolerated.
    if (auto sp = parts[2].find(' '); sp != std::string::npos) parts[2].resize(sp);
    std::optional<long long> y, m, d;
    if (text.find('/') != std::string_view::npos) {
        d = parse_int(parts[0]);
        m = parse_int(parts[1]);
        y = parse_int(parts[2]);
    } else {
        y = parse_int(parts[0]);
        m = parse_int(parts[1]);
        d = parse_int(parts[2]);
    }
    if (!y || !m || !d || *m < 1 || *m > 12 || *d < 1 || *d > 31) return std::nullopt;
    year_month_day ymd{year{static_cast<int>(*y)}, month{static_cast<unsigned>(*m)},
                       day{static_cast<unsigned>(*d)}};
    if (!ymd.ok()) return std::nullopt;
    return sys_days{ymd};
}

std::string format_date(Date date) {
    year_month_day ymd{date};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

Date iso_week_start(Date date) {
    const unsigned iso_dow = weekday{date}.iso_encoding(); // Monday = 1
    return date - days{iso_dow - 1};
}

IsoWeek iso_week(Date date) {
    const Date thursday = iso_week_start(date) + days{3};
    const year y = year_month_day{thursday}.year();
    const Date jan1 = sys_days{y / January / 1};
    return {static_cast<int>(y), static_cast<unsigned>((thursday - jan1).count() / 7 + 1)};
}

std::string iso_week_label(Date date) {
    auto w = iso_week(date);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-W%02u", w.year, w.week);
    return buf;
}

Date month_start(Date date) {
    year_month_day ymd{date};
    return sys_days{ymd.year() / ymd.month() / 1};
}

Date period_start(Date date, Granularity g) {
    switch (g) {
    case Granularity::Daily: return date;
    case Granularity::Weekly: return iso_week_start(date);
    case Granularity::Monthly: return month_start(date);
    }
    return date;
}

Date next_period(Date start, Granularity g) {
    switch (g) {
    case Granularity::Daily: return start + days{1};
    case Granularity::Weekly: return start + days{7};
    case Granularity::Monthly: {
        year_month_day ymd{start};
        return sys_days{(ymd.year() / ymd.month() / 1) + months{1}};
    }
    }
    return start;
}

std::vector<Date> period_range(Date first, Date last, Granularity g) {
    std::vector<Date> out;
    if (last < first) return out;
    for (Date p = period_start(first, g); p <= last; p = next_period(p, g)) out.push_back(p);
    return out;
}

std::string period_label(Date start, Granularity g) {
    switch (g) {
    case Granularity::Daily: return format_date(start);
    case Granularity::Weekly: return iso_week_label(start);
    case Granularity::Monthly: return format_date(start).substr(0, 7);
    }
    return {};
}

} // namespace roadrisk
