// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#include "synth.hpp"

#include "error.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

namespace roadrisk {

namespace {

constexpr double kEarthRadius = 6371000.0;

struct Site {
    double lon = 0.0, lat = 0.0;
    double rate = 0.0;
    RoadType road = RoadType::SingleCarriageway;
    double speed = 30.0;
    JunctionControl junction = JunctionControl::GiveWayOrUncontrolled;
    HumanControl human = HumanControl::NoneWithin50m;
    PhysicalFacility facility = PhysicalFacility::NoCrossingWithin50m;
    double lit = 0.8; // chance a dark-hours accident has working street lights
};

template <class E> E pick(std::mt19937_64& rng, std::initializer_list<std::pair<E, double>> options) {
    std::vector<double> w;
    for (const auto& o : options) w.push_back(o.second);
    std::discrete_distribution<std::size_t> d(w.begin(), w.end());
    return (options.begin() + d(rng))->first;
}

std::string ddmmyyyy(Date d) {
    const std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02u/%02u/%04d", static_cast<unsigned>(ymd.day()),
                  static_cast<unsigned>(ymd.month()), static_cast<int>(ymd.year()));
    return buf;
}

std::string coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

} // namespace

SynthData generate_synthetic(const SynthConfig& cfg) {
    if (cfg.rows == 0 || cfg.cols == 0 || cfg.weeks == 0)
        fail(ErrorKind::Config, "InvalidSynth", "grid and period must be non-empty");
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const double deg_lat = 180.0 / (std::numbers::pi * kEarthRadius);
    const double deg_lon = deg_lat / std::cos(cfg.origin_lat * std::numbers::pi / 180.0);

    std::vector<Site> sites;
    for (std::size_t r = 0; r < cfg.rows; ++r)
        for (std::size_t c = 0; c < cfg.cols; ++c) {
            Site s;
            const double x = (static_cast<double>(c) - 0.5 * static_cast<double>(cfg.cols - 1)) * cfg.spacing_m +
                             cfg.jitter_m * (2.0 * unit(rng) - 1.0);
            const double y = (static_cast<double>(r) - 0.5 * static_cast<double>(cfg.rows - 1)) * cfg.spacing_m +
                             cfg.jitter_m * (2.0 * unit(rng) - 1.0);
            s.lon = std::round((cfg.origin_lon + x * deg_lon) * 1e6) / 1e6;
            s.lat = std::round((cfg.origin_lat + y * deg_lat) * 1e6) / 1e6;
            s.rate = cfg.mean_rate * std::exp(0.5 * normal(rng) - 0.125);
            s.road = pick<RoadType>(rng, {{RoadType::SingleCarriageway, 0.55}, {RoadType::OneWay, 0.12},
                                          {RoadType::DualCarriageway, 0.18}, {RoadType::SlipRoad, 0.05},
                                          {RoadType::Roundabout, 0.10}});
            s.speed = pick<double>(rng, {{20.0, 0.3}, {30.0, 0.55}, {40.0, 0.15}});
            s.junction = pick<JunctionControl>(rng, {{JunctionControl::AutoTrafficSignal, 0.35},
                                                     {JunctionControl::GiveWayOrUncontrolled, 0.45},
                                                     {JunctionControl::StopSign, 0.05},
                                                     {JunctionControl::AuthorisedPerson, 0.05},
                                                     {JunctionControl::Unknown, 0.10}});
            s.human = pick<HumanControl>(rng, {{HumanControl::NoneWithin50m, 0.85},
                                               {HumanControl::SchoolCrossingPatrol, 0.08},
                                               {HumanControl::OtherAuthorisedPerson, 0.07}});
            s.facility = pick<PhysicalFacility>(rng, {{PhysicalFacility::NoCrossingWithin50m, 0.45},
                                                      {PhysicalFacility::SignalJunctionPhase, 0.2},
                                                      {PhysicalFacility::ZebraCrossing, 0.12},
                                                      {PhysicalFacility::CentralRefuge, 0.1},
                                                      {PhysicalFacility::NonJunctionCrossing, 0.1},
                                                      {PhysicalFacility::FootbridgeOrSubway, 0.03}});
            s.lit = 0.6 + 0.35 * unit(rng);
            sites.push_back(s);
        }

    SynthData out;
    const double rho = cfg.weather_persistence;
    double z = normal(rng);
    std::size_t counter = 0;
    for (std::size_t t = 0; t < cfg.weeks; ++t) {
        if (t > 0) z = rho * z + std::sqrt(1.0 - rho * rho) * normal(rng);
        out.latent.push_back(z);
        const Date week_start = cfg.start + std::chrono::days{7 * static_cast<long>(t)};
        const std::chrono::year_month_day ymd{week_start};
        const auto jan1 = std::chrono::sys_days{ymd.year() / std::chrono::January / 1};
        const double doy = static_cast<double>((week_start - jan1).count());
        const double phase = 2.0 * std::numbers::pi * doy / 365.25;
        const double winter = std::cos(phase); // +1 in early January
        const double season = 1.0 + cfg.season_amplitude * winter;
        const double p_dark = 0.35 + 0.25 * winter;
        const double p_adverse = 1.0 / (1.0 + std::exp(1.0 - 2.5 * z));
        const double weather_mult = std::exp(cfg.weather_effect * z - 0.5 * cfg.weather_effect * cfg.weather_effect);
        for (const auto& s : sites) {
            std::poisson_distribution<int> count(s.rate * season * weather_mult);
            const int k = count(rng);
            for (int a = 0; a < k; ++a) {
                AccidentRecord r;
                char id[32];
                std::snprintf(id, sizeof id, "SYN%07zu", ++counter);
                r.id = id;
                r.date = week_start + std::chrono::days{static_cast<long>(unit(rng) * 7.0)};
                r.lon = s.lon;
                r.lat = s.lat;
                const bool adverse = unit(rng) < p_adverse;
                const double u = unit(rng);
                const double fatal = adverse ? 0.025 : 0.012, serious = adverse ? 0.2 : 0.13;
                r.severity = u < fatal ? 1 : (u < fatal + serious ? 2 : 3);
                std::poisson_distribution<int> extra(adverse ? 0.5 : 0.25);
                r.casualties = 1 + extra(rng);
                r.road_type = s.road;
                r.speed_limit = s.speed;
                r.junction_control = s.junction;
                r.ped_human_control = s.human;
                r.ped_physical_facility = s.facility;
                if (unit(rng) < p_dark) {
                    r.light = unit(rng) < s.lit ? LightCondition::DarkLit
                                                : pick<LightCondition>(rng, {{LightCondition::DarkUnlit, 0.4},
                                                                             {LightCondition::DarkNoLighting, 0.4},
                                                                             {LightCondition::DarkLightingUnknown, 0.2}});
                } else {
                    r.light = LightCondition::Daylight;
                }
                if (!adverse) {
                    r.weather = pick<WeatherCondition>(rng, {{WeatherCondition::FineNoWind, 0.9},
                                                             {WeatherCondition::FineHighWind, 0.07},
                                                             {WeatherCondition::Unknown, 0.03}});
                    r.surface = unit(rng) < 0.9 ? SurfaceCondition::Dry : SurfaceCondition::WetDamp;
                } else if (winter > 0.5 && z > 1.0 && unit(rng) < 0.5) {
                    r.weather = pick<WeatherCondition>(rng, {{WeatherCondition::SnowNoWind, 0.6},
                                                             {WeatherCondition::SnowHighWind, 0.4}});
                    r.surface = pick<SurfaceCondition>(rng, {{SurfaceCondition::Snow, 0.5},
                                                             {SurfaceCondition::FrostIce, 0.5}});
                } else {
                    r.weather = pick<WeatherCondition>(rng, {{WeatherCondition::RainNoWind, 0.65},
                                                             {WeatherCondition::RainHighWind, 0.25},
                                                             {WeatherCondition::FogMist, 0.10}});
                    r.surface = pick<SurfaceCondition>(rng, {{SurfaceCondition::WetDamp, 0.9},
                                                             {SurfaceCondition::Flood, 0.1}});
                }
                out.records.push_back(std::move(r));
            }
        }
    }

    std::ostringstream csv;
    csv << "Accident_Index,Longitude,Latitude,Police_Force,Accident_Severity,Number_of_Vehicles,"
           "Number_of_Casualties,Date,Time,Road_Type,Speed_limit,Junction_Control,"
           "Pedestrian_Crossing-Human_Control,Pedestrian_Crossing-Physical_Facilities,Light_Conditions,"
           "Weather_Conditions,Road_Surface_Conditions\n";
    std::uniform_int_distribution<int> hour(0, 23), minute(0, 59), vehicles(1, 3);
    auto row = [&](const AccidentRecord& r, const std::string& lon, const std::string& date) {
        char tm[8];
        std::snprintf(tm, sizeof tm, "%02d:%02d", hour(rng), minute(rng));
        csv << r.id << ',' << lon << ',' << coord(r.lat) << ",1," << r.severity << ',' << vehicles(rng) << ','
            << r.casualties << ',' << date << ',' << tm << ',' << category_code(r.road_type) << ','
            << static_cast<int>(r.speed_limit) << ',' << category_code(r.junction_control) << ','
            << category_code(r.ped_human_control) << ',' << category_code(r.ped_physical_facility) << ','
            << category_code(r.light) << ',' << category_code(r.weather) << ',' << category_code(r.surface) << '\n';
    };
    const std::size_t stride = out.records.empty() ? 1 : out.records.size() / (cfg.malformed_rows + 1) + 1;
    std::size_t bad = 0;
    for (std::size_t i = 0; i < out.records.size(); ++i) {
        const auto& r = out.records[i];
        row(r, coord(r.lon), ddmmyyyy(r.date));
        if (bad < cfg.malformed_rows && i % stride == stride - 1) {
            AccidentRecord broken = r;
            broken.id = "BAD" + std::to_string(bad);
            switch (bad % 4) {
            case 0: row(broken, "", ddmmyyyy(r.date)); break;
            case 1: row(broken, coord(r.lon), "31/02/2011"); break;
            case 2: broken.severity = 7; row(broken, coord(r.lon), ddmmyyyy(r.date)); break;
            default: broken.casualties = 0; row(broken, coord(r.lon), ddmmyyyy(r.date)); break;
            }
            ++bad;
        }
    }
    out.csv = csv.str();
    return out;
}

} // namespace roadrisk
