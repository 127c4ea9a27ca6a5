// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#include "checkpoint.hpp"

#include "error.hpp"
#include "util.hpp"

#include <bit>
#include <cstdint>

namespace roadrisk::nn {

using nlohmann::json;

std::size_t param_count(const ParamSet& params) {
    std::size_t n = 0;
    for (const auto& [name, t] : params) n += t.size();
    return n;
}

std::string encode_f64le(std::span<const double> values) {
    std::string out;
    out.reserve(values.size() * 8);
    for (double v : values) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffU));
    }
    return out;
}

std::vector<double> decode_f64le(std::string_view bytes) {
    if (bytes.size() % 8 != 0) fail(ErrorKind::Data, "CorruptBinary", "payload length is not a multiple of 8");
    std::vector<double> out(bytes.size() / 8);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b)
            bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[8 * i + b])) << (8 * b);
        out[i] = std::bit_cast<double>(bits);
    }
    return out;
}

void save_params(const ParamSet& params, const std::filesystem::path& bin, const std::filesystem::path& manifest,
                 const json& meta) {
    json entries = json::array();
    std::string payload;
    std::size_t offset = 0;
    for (const auto& [name, t] : params) {
        entries.push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}, {"count", t.size()}});
        payload += encode_f64le(t.values());
        offset += t.size();
    }
    json m{{"format", "roadrisk-params"},
           {"version", 1},
           {"dtype", "f64le"},
           {"total", offset},
           {"binary", bin.filename().string()},
           {"params", entries},
           {"meta", meta}};
    write_file(bin, payload);
    write_file(manifest, m.dump(2) + "\n");
}

LoadedParams load_params(const std::filesystem::path& bin, const std::filesystem::path& manifest) {
    json m;
    try {
        m = json::parse(read_file(manifest));
    } catch (const json::exception& e) {
        fail(ErrorKind::Data, "CorruptManifest", manifest.string() + ": " + e.what());
    }
    if (m.value("format", "") != "roadrisk-params")
        fail(ErrorKind::Data, "CorruptManifest", manifest.string() + ": not a parameter manifest");
    const auto values = decode_f64le(read_file(bin));
    LoadedParams out;
    out.meta = m.value("meta", json::object());
    std::size_t used = 0;
    for (const auto& e : m.at("params")) {
        const auto shape = e.at("shape").get<Shape>();
        const std::size_t off = e.at("offset").get<std::size_t>();
        const std::size_t count = e.at("count").get<std::size_t>();
        if (count != shape_size(shape) || off + count > values.size())
            fail(ErrorKind::Data, "CorruptBinary", "parameter " + e.at("name").get<std::string>() + " out of range");
        out.params[e.at("name").get<std::string>()] =
            Tensor(shape, std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(off),
                                              values.begin() + static_cast<std::ptrdiff_t>(off + count)));
        used += count;
    }
    if (used != values.size()) fail(ErrorKind::Data, "CorruptBinary", "payload has unreferenced values");
    return out;
}

} // namespace roadrisk::nn
