// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "calendar.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace roadrisk {

// Categorical context fields. Every enum carries an Unknown variant that
// absorbs missing (-1), "unknown" and unlisted codes.
enum class RoadType { SingleCarriageway, OneWay, DualCarriageway, SlipRoad, Roundabout, Unknown };
enum class HumanControl { SchoolCrossingPatrol, OtherAuthorisedPerson, NoneWithin50m, Unknown };
enum class PhysicalFacility {
    FootbridgeOrSubway,
    SignalJunctionPhase,
    NonJunctionCrossing,
    ZebraCrossing,
    CentralRefuge,
    NoCrossingWithin50m,
    Unknown
};
enum class LightCondition { Daylight, DarkLit, DarkLightingUnknown, DarkUnlit, DarkNoLighting, Unknown };
enum class JunctionControl { AuthorisedPerson, AutoTrafficSignal, StopSign, GiveWayOrUncontrolled, Unknown };
enum class SurfaceCondition { Dry, WetDamp, Snow, Flood, FrostIce, Unknown };
enum class WeatherCondition {
    FineNoWind,
    FineHighWind,
    RainNoWind,
    FogMist,
    RainHighWind,
    SnowNoWind,
    SnowHighWind,
    Unknown
};

struct AccidentRecord {
    std::string id;
    Date date{};
    double lon = 0.0;
    double lat = 0.0;
    int severity = 3; // 1 fatal, 2 serious, 3 slight
    int casualties = 1;
    RoadType road_type = RoadType::Unknown;
    double speed_limit = 0.0; // mph
    JunctionControl junction_control = JunctionControl::Unknown;
    HumanControl ped_human_control = HumanControl::Unknown;
    PhysicalFacility ped_physical_facility = PhysicalFacility::Unknown;
    LightCondition light = LightCondition::Unknown;
    WeatherCondition weather = WeatherCondition::Unknown;
    SurfaceCondition surface = SurfaceCondition::Unknown;

    bool operator==(const AccidentRecord&) const = default;
};

template <class E>
struct Category {
    E value;
    std::string_view name;  // identifier used in weight tables
    int code;               // STATS19 numeric code written to artifacts
    std::string_view label; // STATS19 text label
};

template <class E> std::span<const Category<E>> categories();

// Accepts a STATS19 numeric code or text label (case and punctuation
// insensitive). Anything unrecognised maps to E::Unknown.
template <class E> E parse_category(std::string_view field);
template <class E> std::string_view category_name(E value);
template <class E> int category_code(E value);
template <class E> std::optional<E> category_from_name(std::string_view name);

} // namespace roadrisk
