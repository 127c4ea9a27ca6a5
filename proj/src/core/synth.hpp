// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "accident.hpp"
#include "calendar.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace roadrisk {

// Seeded synthetic accident process on a jittered grid of sites. Weekly
// counts follow a per-site base rate times an annual cycle times a shared
// AR(1) adverse-weather latent; weather, surface and lighting fields are drawn
// conditional on that latent and on the season.
struct SynthConfig {
    std::size_t rows = 5;
    std::size_t cols = 6;
    double spacing_m = 450.0;
    double jitter_m = 60.0; // site placement jitter; accidents sit on their site
    double origin_lat = 51.5074;
    double origin_lon = -0.1278;
    Date start = Date{std::chrono::year{2010} / std::chrono::January / 4};
    std::size_t weeks = 208;
    double mean_rate = 5.0;      // accidents per site-week before modulation
    double season_amplitude = 0.5;
    double weather_persistence = 0.8;
    double weather_effect = 0.35;   // log-rate per unit latent
    std::size_t malformed_rows = 4;
    std::uint64_t seed = 20260415;
};

struct SynthData {
    std::vector<AccidentRecord> records;
    std::vector<double> latent; // per week
    std::string csv;            // raw file text, STATS19-style, with malformed rows
};

SynthData generate_synthetic(const SynthConfig& cfg);

} // namespace roadrisk
