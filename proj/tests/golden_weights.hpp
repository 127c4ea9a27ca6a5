// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Published risk weight tables, transcribed by hand. Kept apart from the
// library defaults so a typo in either shows up as a mismatch.

#include <string>
#include <vector>

#include "risk_features.hpp"

namespace roadrisk::golden {

struct Entry {
    std::string table;
    std::string category;
    double expected;
    double actual;
};

inline std::vector<Entry> compare(const WeightTables& w) {
    std::vector<Entry> e;
    auto add = [&](const char* table, const char* cat, double expected, double actual) {
        e.push_back({table, cat, expected, actual});
    };
    add("severity", "Fatal", 3.0, w.severity_of(1));
    add("severity", "Serious", 2.0, w.severity_of(2));
    add("severity", "Slight", 1.0, w.severity_of(3));

    add("road", "SingleCarriageway", 1.0, w.of(RoadType::SingleCarriageway));
    add("road", "OneWay", 1.1, w.of(RoadType::OneWay));
    add("road", "DualCarriageway", 1.2, w.of(RoadType::DualCarriageway));
    add("road", "SlipRoad", 1.3, w.of(RoadType::SlipRoad));
    add("road", "Roundabout", 1.5, w.of(RoadType::Roundabout));

    add("human_control", "SchoolCrossingPatrol", 0.2, w.of(HumanControl::SchoolCrossingPatrol));
    add("human_control", "OtherAuthorisedPerson", 0.3, w.of(HumanControl::OtherAuthorisedPerson));
    add("human_control", "NoneWithin50m", 0.4, w.of(HumanControl::NoneWithin50m));

    add("physical_facility", "FootbridgeOrSubway", 0.1, w.of(PhysicalFacility::FootbridgeOrSubway));
    add("physical_facility", "SignalJunctionPhase", 0.2, w.of(PhysicalFacility::SignalJunctionPhase));
    add("physical_facility", "NonJunctionCrossing", 0.3, w.of(PhysicalFacility::NonJunctionCrossing));
    add("physical_facility", "ZebraCrossing", 0.35, w.of(PhysicalFacility::ZebraCrossing));
    add("physical_facility", "CentralRefuge", 0.4, w.of(PhysicalFacility::CentralRefuge));
    add("physical_facility", "NoCrossingWithin50m", 0.6, w.of(PhysicalFacility::NoCrossingWithin50m));

    add("light", "Daylight", 0.2, w.of(LightCondition::Daylight));
    add("light", "DarkLit", 0.4, w.of(LightCondition::DarkLit));
    add("light", "DarkLightingUnknown", 0.6, w.of(LightCondition::DarkLightingUnknown));
    add("light", "DarkUnlit", 0.7, w.of(LightCondition::DarkUnlit));
    add("light", "DarkNoLighting", 0.8, w.of(LightCondition::DarkNoLighting));

    add("junction_control", "AuthorisedPerson", 0.2, w.of(JunctionControl::AuthorisedPerson));
    add("junction_control", "AutoTrafficSignal", 0.3, w.of(JunctionControl::AutoTrafficSignal));
    add("junction_control", "StopSign", 0.5, w.of(JunctionControl::StopSign));
    add("junction_control", "GiveWayOrUncontrolled", 0.7, w.of(JunctionControl::GiveWayOrUncontrolled));

    add("surface", "Dry", 0.2, w.of(SurfaceCondition::Dry));
    add("surface", "WetDamp", 0.5, w.of(SurfaceCondition::WetDamp));
    add("surface", "Snow", 0.7, w.of(SurfaceCondition::Snow));
    add("surface", "Flood", 0.7, w.of(SurfaceCondition::Flood));
    add("surface", "FrostIce", 0.8, w.of(SurfaceCondition::FrostIce));

    add("weather", "FineNoWind", 0.2, w.of(WeatherCondition::FineNoWind));
    add("weather", "FineHighWind", 0.3, w.of(WeatherCondition::FineHighWind));
    add("weather", "RainNoWind", 0.5, w.of(WeatherCondition::RainNoWind));
    add("weather", "FogMist", 0.6, w.of(WeatherCondition::FogMist));
    add("weather", "RainHighWind", 0.7, w.of(WeatherCondition::RainHighWind));
    add("weather", "SnowNoWind", 0.7, w.of(WeatherCondition::SnowNoWind));
    add("weather", "SnowHighWind", 0.8, w.of(WeatherCondition::SnowHighWind));
    return e;
}

} // namespace roadrisk::golden
