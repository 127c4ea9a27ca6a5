// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#include "accident.hpp"

#include "util.hpp"

#include <array>
#include <cctype>

namespace roadrisk {

namespace {

constexpr std::array<Category<RoadType>, 6> kRoadTypes{{
    {RoadType::SingleCarriageway, "SingleCarriageway", 6, "Single carriageway"},
    {RoadType::OneWay, "OneWay", 2, "One way street"},
    {RoadType::DualCarriageway, "DualCarriageway", 3, "Dual carriageway"},
    {RoadType::SlipRoad, "SlipRoad", 7, "Slip road"},
    {RoadType::Roundabout, "Roundabout", 1, "Roundabout"},
    {RoadType::Unknown, "Unknown", -1, "Unknown"},
}};

constexpr std::array<Category<HumanControl>, 4> kHumanControl{{
    {HumanControl::SchoolCrossingPatrol, "SchoolCrossingPatrol", 1, "Control by school crossing patrol"},
    {HumanControl::OtherAuthorisedPerson, "OtherAuthorisedPerson", 2, "Control by other authorised person"},
    {HumanControl::NoneWithin50m, "NoneWithin50m", 0, "None within 50 metres"},
    {HumanControl::Unknown, "Unknown", -1, "Unknown"},
}};

constexpr std::array<Category<PhysicalFacility>, 7> kPhysicalFacility{{
    {PhysicalFacility::FootbridgeOrSubway, "FootbridgeOrSubway", 7, "Footbridge or subway"},
    {PhysicalFacility::SignalJunctionPhase, "SignalJunctionPhase", 5, "Pedestrian phase at traffic signal junction"},
    {PhysicalFacility::NonJunctionCrossing, "NonJunctionCrossing", 4,
     "Pelican, puffin, toucan or similar non-junction pedestrian light crossing"},
    {PhysicalFacility::ZebraCrossing, "ZebraCrossing", 1, "Zebra crossing"},
    {PhysicalFacility::CentralRefuge, "CentralRefuge", 8, "Central refuge"},
    {PhysicalFacility::NoCrossingWithin50m, "NoCrossingWithin50m", 0,
     "No physical crossing facilities within 50 metres"},
    {PhysicalFacility::Unknown, "Unknown", -1, "Unknown"},
}};

constexpr std::array<Category<LightCondition>, 6> kLight{{
    {LightCondition::Daylight, "Daylight", 1, "Daylight"},
    {LightCondition::DarkLit, "DarkLit", 4, "Darkness - lights lit"},
    {LightCondition::DarkLightingUnknown, "DarkLightingUnknown", 7, "Darkness - lighting unknown"},
    {LightCondition::DarkUnlit, "DarkUnlit", 5, "Darkness - lights unlit"},
    {LightCondition::DarkNoLighting, "DarkNoLighting", 6, "Darkness - no lighting"},
    {LightCondition::Unknown, "Unknown", -1, "Unknown"},
}};

// Code 0 ("not at junction or within 20 metres") has no weight in the
// infrastructure table and therefore falls through to Unknown.
constexpr std::array<Category<JunctionControl>, 5> kJunction{{
    {JunctionControl::AuthorisedPerson, "AuthorisedPerson", 1, "Authorised person"},
    {JunctionControl::AutoTrafficSignal, "AutoTrafficSignal", 2, "Auto traffic signal"},
    {JunctionControl::StopSign, "StopSign", 3, "Stop sign"},
    {JunctionControl::GiveWayOrUncontrolled, "GiveWayOrUncontrolled", 4, "Give way or uncontrolled"},
    {JunctionControl::Unknown, "Unknown", -1, "Unknown"},
}};

constexpr std::array<Category<SurfaceCondition>, 6> kSurface{{
    {SurfaceCondition::Dry, "Dry", 1, "Dry"},
    {SurfaceCondition::WetDamp, "WetDamp", 2, "Wet or damp"},
    {SurfaceCondition::Snow, "Snow", 3, "Snow"},
    {SurfaceCondition::Flood, "Flood", 5, "Flood over 3cm. deep"},
    {SurfaceCondition::FrostIce, "FrostIce", 4, "Frost or ice"},
    {SurfaceCondition::Unknown, "Unknown", -1, "Unknown"},
}};

constexpr std::array<Category<WeatherCondition>, 8> kWeather{{
    {WeatherCondition::FineNoWind, "FineNoWind", 1, "Fine no high winds"},
    {WeatherCondition::FineHighWind, "FineHighWind", 4, "Fine + high winds"},
    {WeatherCondition::RainNoWind, "RainNoWind", 2, "Raining no high winds"},
    {WeatherCondition::FogMist, "FogMist", 7, "Fog or mist"},
    {WeatherCondition::RainHighWind, "RainHighWind", 5, "Raining + high winds"},
    {WeatherCondition::SnowNoWind, "SnowNoWind", 3, "Snowing no high winds"},
    {WeatherCondition::SnowHighWind, "SnowHighWind", 6, "Snowing + high winds"},
    {WeatherCondition::Unknown, "Unknown", -1, "Unknown"},
}};

std::string squash(std::string_view text) {
    std::string out;
    for (unsigned char c : text)
        if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
    return out;
}

} // namespace

template <> std::span<const Category<RoadType>> categories<RoadType>() { return kRoadTypes; }
template <> std::span<const Category<HumanControl>> categories<HumanControl>() { return kHumanControl; }
template <> std::span<const Category<PhysicalFacility>> categories<PhysicalFacility>() { return kPhysicalFacility; }
template <> std::span<const Category<LightCondition>> categories<LightCondition>() { return kLight; }
template <> std::span<const Category<JunctionControl>> categories<JunctionControl>() { return kJunction; }
template <> std::span<const Category<SurfaceCondition>> categories<SurfaceCondition>() { return kSurface; }
template <> std::span<const Category<WeatherCondition>> categories<WeatherCondition>() { return kWeather; }

template <class E> E parse_category(std::string_view field) {
    field = trim(field);
    if (auto code = parse_int(field)) {
        for (const auto& c : categories<E>())
            if (c.code == *code && c.value != E::Unknown) return c.value;
        return E::Unknown;
    }
    const std::string key = squash(field);
    if (key.empty()) return E::Unknown;
    for (const auto& c : categories<E>())
        if (squash(c.label) == key || squash(c.name) == key) return c.value;
    return E::Unknown;
}

template <class E> std::string_view category_name(E value) {
    for (const auto& c : categories<E>())
        if (c.value == value) return c.name;
    return "Unknown";
}

template <class E> int category_code(E value) {
    for (const auto& c : categories<E>())
        if (c.value == value) return c.code;
    return -1;
}

template <class E> std::optional<E> category_from_name(std::string_view name) {
    for (const auto& c : categories<E>())
        if (c.name == name) return c.value;
    return std::nullopt;
}

#define ROADRISK_INSTANTIATE_CATEGORY(E)                                                          \
    template E parse_category<E>(std::string_view);                                               \
    template std::string_view category_name<E>(E);                                                \
    template int category_code<E>(E);                                                             \
    template std::optional<E> category_from_name<E>(std::string_view);

ROADRISK_INSTANTIATE_CATEGORY(RoadType)
ROADRISK_INSTANTIATE_CATEGORY(HumanControl)
ROADRISK_INSTANTIATE_CATEGORY(PhysicalFacility)
ROADRISK_INSTANTIATE_CATEGORY(LightCondition)
ROADRISK_INSTANTIATE_CATEGORY(JunctionControl)
ROADRISK_INSTANTIATE_CATEGORY(SurfaceCondition)
ROADRISK_INSTANTIATE_CATEGORY(WeatherCondition)

#undef ROADRISK_INSTANTIATE_CATEGORY

} // namespace roadrisk
