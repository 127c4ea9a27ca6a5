// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#include "run_config.hpp"

#include "error.hpp"
#include "util.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace roadrisk {

using nlohmann::json;

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = [] {
        std::set<std::string> k{
            "paths.data",           "paths.output",          "paths.weights",
            "region.name",          "region.lon_min",        "region.lat_min",
            "region.lon_max",       "region.lat_max",        "region.start",
            "region.end",           "schema.default_speed_limit",
            "graph.cell_size_m",    "graph.k",               "graph.sigma",
            "features.temporal_weighting", "features.tau",   "features.unknown_default",
            "features.set",         "diffusion.preset",      "diffusion.alpha",
            "diffusion.iters",      "diffusion.beta",        "diffusion.fuse_each_step",
            "model.d",              "model.heads",           "model.layers",
            "model.t_in",           "model.t_out",           "model.conv_kernel",
            "model.dropout",        "model.spatial_attention", "model.encoder_causal",
            "model.zero_init_head", "train.epochs_main",     "train.epochs_finetune",
            "train.lr_main",        "train.lr_finetune",     "train.batch",
            "train.seed",           "train.mape_eps",        "train.check_finite",
            "validation.cell_size_m",
        };
        for (const auto& c : CsvSchema::logical_columns()) k.insert("schema." + c);
        return k;
    }();
    return keys;
}

[[noreturn]] void config_error(const std::string& code, const std::string& msg) { fail(ErrorKind::Config, code, msg); }

} // namespace

RunConfig RunConfig::parse(std::string_view text, std::filesystem::path base_dir) {
    RunConfig cfg;
    cfg.base_dir_ = std::move(base_dir);
    std::string section;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') config_error("ConfigSyntax", "line " + std::to_string(line_no) + ": unterminated section");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            config_error("ConfigSyntax", "line " + std::to_string(line_no) + ": expected key = value");
        if (section.empty()) config_error("ConfigSyntax", "line " + std::to_string(line_no) + ": key outside a section");
        const std::string key = section + "." + std::string(trim(line.substr(0, eq)));
        if (cfg.entries_.count(key)) config_error("DuplicateKey", "line " + std::to_string(line_no) + ": " + key);
        cfg.set(key, std::string(trim(line.substr(eq + 1))));
    }
    return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error& e) {
        config_error("MissingConfig", "cannot read config " + path.string());
    }
    return parse(text, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (!known_keys().count(key)) config_error("UnknownKey", key);
    entries_[key] = value;
}

std::optional<std::string> RunConfig::get(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

std::string RunConfig::canonical_text() const {
    std::string out;
    for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
    return out;
}

std::string RunConfig::hash() const { return hex64(fnv1a(canonical_text())); }

std::string RunConfig::str(const std::string& key, const std::string& fallback) const {
    return get(key).value_or(fallback);
}

double RunConfig::num(const std::string& key, double fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    auto d = parse_double(*v);
    if (!d) config_error("InvalidValue", key + " must be a number, got '" + *v + "'");
    return *d;
}

long long RunConfig::integer(const std::string& key, long long fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    auto d = parse_int(*v);
    if (!d) config_error("InvalidValue", key + " must be an integer, got '" + *v + "'");
    return *d;
}

bool RunConfig::flag(const std::string& key, bool fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    const std::string s = to_lower(*v);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    config_error("InvalidValue", key + " must be a boolean, got '" + *v + "'");
}

std::filesystem::path RunConfig::resolve(const std::string& p) const {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir_ / path;
}

std::filesystem::path RunConfig::data_path() const {
    auto v = get("paths.data");
    if (!v) config_error("MissingKey", "paths.data");
    return resolve(*v);
}

std::filesystem::path RunConfig::output_dir() const { return resolve(str("paths.output", "out")); }

std::optional<std::filesystem::path> RunConfig::weights_path() const {
    auto v = get("paths.weights");
    if (!v) return std::nullopt;
    return resolve(*v);
}

RegionSpec RunConfig::region() const {
    RegionSpec r;
    r.name = str("region.name", "region");
    r.lon_min = num("region.lon_min", r.lon_min);
    r.lat_min = num("region.lat_min", r.lat_min);
    r.lon_max = num("region.lon_max", r.lon_max);
    r.lat_max = num("region.lat_max", r.lat_max);
    for (const char* k : {"region.start", "region.end"})
        if (!get(k)) config_error("MissingKey", k);
    const auto start = parse_date(*get("region.start"));
    const auto end = parse_date(*get("region.end"));
    if (!start || !end) config_error("InvalidValue", "region.start and region.end must be dates");
    r.start = *start;
    r.end = *end;
    r.validate();
    return r;
}

CsvSchema RunConfig::schema() const {
    CsvSchema s;
    for (const auto& c : CsvSchema::logical_columns())
        if (auto v = get("schema." + c)) s.columns[c] = *v;
    s.default_speed_limit = num("schema.default_speed_limit", s.default_speed_limit);
    if (!(s.default_speed_limit >= 0.0)) config_error("InvalidValue", "schema.default_speed_limit must be >= 0");
    return s;
}

WeightTables RunConfig::weights() const {
    WeightTables w = weights_path() ? WeightTables::load(*weights_path()) : WeightTables::standard();
    w.unknown_default = num("features.unknown_default", w.unknown_default);
    w.validate();
    return w;
}

TemporalWeightConfig RunConfig::temporal_weighting() const {
    TemporalWeightConfig t;
    const std::string mode = to_lower(str("features.temporal_weighting", "same_week"));
    if (mode == "same_week") t.mode = TemporalWeighting::SameWeek;
    else if (mode == "causal_gaussian") t.mode = TemporalWeighting::CausalGaussian;
    else config_error("InvalidValue", "features.temporal_weighting must be same_week or causal_gaussian");
    t.tau = num("features.tau", t.tau);
    if (!(t.tau >= 0.0)) config_error("InvalidValue", "features.tau must be >= 0");
    return t;
}

double RunConfig::cell_size_m() const {
    const double c = num("graph.cell_size_m", 150.0);
    if (!(c > 0.0)) config_error("InvalidValue", "graph.cell_size_m must be > 0");
    return c;
}

int RunConfig::graph_k() const {
    const auto k = integer("graph.k", 4);
    if (k < 1) config_error("InvalidValue", "graph.k must be >= 1");
    return static_cast<int>(k);
}

std::optional<double> RunConfig::graph_sigma() const {
    auto v = get("graph.sigma");
    if (!v || to_lower(*v) == "auto") return std::nullopt;
    const double s = num("graph.sigma", 0.0);
    if (!(s > 0.0)) config_error("InvalidValue", "graph.sigma must be > 0 or auto");
    return s;
}

DiffusionConfig RunConfig::diffusion() const {
    DiffusionConfig d;
    if (auto p = get("diffusion.preset")) {
        auto preset = find_diffusion_preset(*p);
        if (!preset) config_error("InvalidValue", "unknown diffusion preset " + *p);
        d = *preset;
    } else {
        d = *find_diffusion_preset("Differentiated_B");
    }
    auto triple = [&](const char* key, auto& target) {
        auto v = get(key);
        if (!v) return;
        const auto parts = split(*v, ',');
        if (parts.size() != 3) config_error("InvalidValue", std::string(key) + " needs three comma-separated values");
        for (std::size_t f = 0; f < 3; ++f) {
            auto x = parse_double(parts[f]);
            if (!x) config_error("InvalidValue", std::string(key) + ": bad number '" + parts[f] + "'");
            target[f] = static_cast<std::remove_reference_t<decltype(target[0])>>(*x);
        }
        d.name = "custom";
    };
    triple("diffusion.alpha", d.alpha);
    triple("diffusion.iters", d.iters);
    d.beta = num("diffusion.beta", d.beta);
    d.fuse_each_step = flag("diffusion.fuse_each_step", d.fuse_each_step);
    try {
        d.validate();
    } catch (const Error& e) {
        config_error("InvalidValue", e.what());
    }
    return d;
}

nn::ModelConfig RunConfig::model() const {
    nn::ModelConfig m;
    m.d = static_cast<std::size_t>(integer("model.d", static_cast<long long>(m.d)));
    m.heads = static_cast<std::size_t>(integer("model.heads", static_cast<long long>(m.heads)));
    m.layers = static_cast<std::size_t>(integer("model.layers", static_cast<long long>(m.layers)));
    m.t_in = static_cast<std::size_t>(integer("model.t_in", static_cast<long long>(m.t_in)));
    m.t_out = static_cast<std::size_t>(integer("model.t_out", static_cast<long long>(m.t_out)));
    m.conv_kernel = static_cast<std::size_t>(integer("model.conv_kernel", static_cast<long long>(m.conv_kernel)));
    m.dropout = num("model.dropout", m.dropout);
    m.spatial_attention = flag("model.spatial_attention", m.spatial_attention);
    m.encoder_causal = flag("model.encoder_causal", m.encoder_causal);
    m.zero_init_head = flag("model.zero_init_head", m.zero_init_head);
    for (const char* k : {"model.d", "model.heads", "model.layers", "model.t_in", "model.t_out", "model.conv_kernel"})
        if (integer(k, 1) < 1) config_error("InvalidValue", std::string(k) + " must be >= 1");
    m.validate();
    return m;
}

TrainConfig RunConfig::train() const {
    TrainConfig t;
    t.epochs_main = static_cast<int>(integer("train.epochs_main", t.epochs_main));
    t.epochs_finetune = static_cast<int>(integer("train.epochs_finetune", t.epochs_finetune));
    t.lr_main = num("train.lr_main", t.lr_main);
    if (get("train.lr_finetune")) t.lr_finetune = num("train.lr_finetune", 0.0);
    const auto batch = integer("train.batch", 0);
    if (batch < 0) config_error("InvalidValue", "train.batch must be >= 0");
    t.batch = static_cast<std::size_t>(batch);
    t.seed = static_cast<std::uint64_t>(integer("train.seed", static_cast<long long>(t.seed)));
    t.check_finite = flag("train.check_finite", false);
    t.validate();
    return t;
}

FeatureMask RunConfig::features() const {
    const std::string s = str("features.set", "SIE");
    auto m = feature_mask_from_name(s);
    if (!m) config_error("InvalidValue", "features.set must be a subset of SIE, got '" + s + "'");
    return *m;
}

double RunConfig::mape_eps() const {
    const double e = num("train.mape_eps", 1e-8);
    if (!(e >= 0.0)) config_error("InvalidValue", "train.mape_eps must be >= 0");
    return e;
}

double RunConfig::validation_cell_m() const {
    const double c = num("validation.cell_size_m", 1000.0);
    if (!(c > 0.0)) config_error("InvalidValue", "validation.cell_size_m must be > 0");
    return c;
}

std::uint64_t RunConfig::seed() const { return train().seed; }

json RunConfig::to_json() const {
    const auto t = temporal_weighting();
    return {{"features", feature_mask_name(features())},
            {"diffusion", diffusion().to_json()},
            {"model", model().to_json()},
            {"train", train().to_json()},
            {"graph", {{"cell_size_m", cell_size_m()}, {"k", graph_k()},
                       {"sigma", graph_sigma() ? json(*graph_sigma()) : json("auto")}}},
            {"temporal_weighting", {{"mode", t.mode == TemporalWeighting::SameWeek ? "same_week" : "causal_gaussian"},
                                    {"tau", t.tau}}},
            {"mape_eps", mape_eps()}};
}

} // namespace roadrisk
