// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tensor.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <string>

namespace roadrisk::nn {

// Named parameter arrays. Iteration order (sorted by name) is the canonical
// order for checkpoints and optimizer state.
using ParamSet = std::map<std::string, Tensor>;

std::size_t param_count(const ParamSet& params);

// JSON manifest (names, shapes, offsets) plus a flat little-endian f64 payload.
// `meta` is stored verbatim in the manifest.
void save_params(const ParamSet& params, const std::filesystem::path& bin, const std::filesystem::path& manifest,
                 const nlohmann::json& meta = nlohmann::json::object());

struct LoadedParams {
    ParamSet params;
    nlohmann::json meta;
};
LoadedParams load_params(const std::filesystem::path& bin, const std::filesystem::path& manifest);

// Encoding helpers shared with other binary artifacts.
std::string encode_f64le(std::span<const double> values);
std::vector<double> decode_f64le(std::string_view bytes);

} // namespace roadrisk::nn
