// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#include "roadrisk/roadrisk.h"

#include "checkpoint.hpp"
#include "error.hpp"
#include "model.hpp"
#include "pipeline.hpp"
#include "riskmap.hpp"
#include "run_config.hpp"
#include "spatial_graph.hpp"
#include "train_eval.hpp"
#include "util.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <new>
#include <string>

struct rr_config {
    roadrisk::RunConfig cfg;
};
struct rr_graph {
    roadrisk::SpatialGraph graph;
};
struct rr_tensor {
    roadrisk::RiskTensor tensor;
};
struct rr_model {
    roadrisk::nn::Model model;
    roadrisk::nn::ParamSet params;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_error_code;

rr_status status_of(roadrisk::ErrorKind kind) {
    using roadrisk::ErrorKind;
    switch (kind) {
    case ErrorKind::Config: return RR_ERR_CONFIG;
    case ErrorKind::Data: return RR_ERR_DATA;
    case ErrorKind::Numeric: return RR_ERR_NUMERIC;
    case ErrorKind::Io: return RR_ERR_IO;
    case ErrorKind::MissingArtifact: return RR_ERR_MISSING_ARTIFACT;
    case ErrorKind::InvalidArgument: return RR_ERR_INVALID_ARGUMENT;
    }
    return RR_ERR_INTERNAL;
}

rr_status set_error(rr_status s, std::string code, std::string msg) {
    g_error_code = std::move(code);
    g_error = std::move(msg);
    return s;
}

rr_status invalid(const char* msg) { return set_error(RR_ERR_INVALID_ARGUMENT, "InvalidArgument", msg); }

template <class Fn> rr_status guarded(Fn&& fn) {
    try {
        fn();
        return RR_OK;
    } catch (const roadrisk::Error& e) {
        return set_error(status_of(e.kind()), e.code(), e.what());
    } catch (const std::bad_alloc&) {
        return set_error(RR_ERR_INTERNAL, "OutOfMemory", "allocation failed");
    } catch (const std::exception& e) {
        return set_error(RR_ERR_INTERNAL, "Internal", e.what());
    }
}

rr_status copy_out(const std::vector<double>& v, double* out, size_t cap) {
    if (!out || cap < v.size()) return invalid("output buffer too small");
    std::copy(v.begin(), v.end(), out);
    return RR_OK;
}

} // namespace

extern "C" {

const char* rr_version(void) { return "0.1.0"; }
const char* rr_last_error(void) { return g_error.c_str(); }
const char* rr_last_error_code(void) { return g_error_code.c_str(); }

int rr_exit_code(rr_status s) {
    switch (s) {
    case RR_OK: return 0;
    case RR_ERR_CONFIG:
    case RR_ERR_INVALID_ARGUMENT: return 2;
    case RR_ERR_DATA:
    case RR_ERR_IO:
    case RR_ERR_MISSING_ARTIFACT: return 3;
    case RR_ERR_NUMERIC: return 4;
    default: return 1;
    }
}

void rr_set_log_level(int level) {
    using roadrisk::LogLevel;
    roadrisk::set_log_level(level <= 0 ? LogLevel::Quiet : level == 1 ? LogLevel::Normal : LogLevel::Verbose);
}

rr_status rr_config_load(const char* path, rr_config** out) {
    if (!path || !out) return invalid("null argument");
    *out = nullptr;
    return guarded([&] { *out = new rr_config{roadrisk::RunConfig::load(path)}; });
}

rr_status rr_config_from_string(const char* text, const char* base_dir, rr_config** out) {
    if (!text || !out) return invalid("null argument");
    *out = nullptr;
    return guarded([&] { *out = new rr_config{roadrisk::RunConfig::parse(text, base_dir ? base_dir : ".")}; });
}

rr_status rr_config_set(rr_config* cfg, const char* key, const char* value) {
    if (!cfg || !key || !value) return invalid("null argument");
    return guarded([&] { cfg->cfg.set(key, value); });
}

rr_status rr_config_get(const rr_config* cfg, const char* key, char* buf, size_t cap, size_t* needed) {
    if (!cfg || !key) return invalid("null argument");
    const auto v = cfg->cfg.get(key);
    if (!v) return set_error(RR_ERR_INVALID_ARGUMENT, "UnsetKey", std::string(key) + " is not set");
    if (needed) *needed = v->size() + 1;
    if (!buf || cap < v->size() + 1) return invalid("output buffer too small");
    std::memcpy(buf, v->c_str(), v->size() + 1);
    return RR_OK;
}

rr_status rr_config_hash(const rr_config* cfg, char out[17]) {
    if (!cfg || !out) return invalid("null argument");
    const std::string h = cfg->cfg.hash();
    std::memcpy(out, h.c_str(), 17);
    return RR_OK;
}

void rr_config_free(rr_config* cfg) { delete cfg; }

size_t rr_command_count(void) { return roadrisk::command_names().size(); }

const char* rr_command_name(size_t index) {
    const auto& names = roadrisk::command_names();
    return index < names.size() ? names[index].c_str() : nullptr;
}

rr_status rr_cmd_run(const rr_config* cfg, const char* command) {
    if (!cfg || !command) return invalid("null argument");
    return guarded([&] { roadrisk::run_command(cfg->cfg, command); });
}

rr_status rr_synth_write(const char* path, uint64_t seed) {
    if (!path) return invalid("null argument");
    return guarded([&] { roadrisk::write_synthetic_fixture(path, seed); });
}

rr_status rr_graph_from_points(const double* lon, const double* lat, size_t n, double cell_size_m, int k, double sigma,
                               rr_graph** out) {
    if ((!lon || !lat) && n > 0) return invalid("null argument");
    if (!out) return invalid("null argument");
    *out = nullptr;
    return guarded([&] {
        std::vector<roadrisk::GeoPoint> pts(n);
        for (size_t i = 0; i < n; ++i) pts[i] = {lon[i], lat[i]};
        auto asg = roadrisk::assign_points_to_cells(pts, cell_size_m);
        std::optional<double> s;
        if (sigma > 0.0) s = sigma;
        *out = new rr_graph{roadrisk::SpatialGraph::build(std::move(asg.nodes), k, s, cell_size_m)};
    });
}

rr_status rr_graph_load(const char* nodes_csv, const char* edges_csv, rr_graph** out) {
    if (!nodes_csv || !edges_csv || !out) return invalid("null argument");
    *out = nullptr;
    return guarded([&] { *out = new rr_graph{roadrisk::SpatialGraph::load(nodes_csv, edges_csv)}; });
}

size_t rr_graph_num_nodes(const rr_graph* g) { return g ? g->graph.num_nodes() : 0; }
size_t rr_graph_num_edges(const rr_graph* g) { return g ? g->graph.undirected_edges() : 0; }

rr_status rr_graph_adjacency(const rr_graph* g, int normalized, double* out, size_t cap) {
    if (!g) return invalid("null argument");
    return copy_out(normalized ? g->graph.normalized.dense() : g->graph.adjacency.dense(), out, cap);
}

void rr_graph_free(rr_graph* g) { delete g; }

rr_status rr_tensor_load(const char* bin_path, const char* json_path, rr_tensor** out) {
    if (!bin_path || !json_path || !out) return invalid("null argument");
    *out = nullptr;
    return guarded([&] { *out = new rr_tensor{roadrisk::load_risk_tensor(bin_path, json_path)}; });
}

size_t rr_tensor_weeks(const rr_tensor* t) { return t ? t->tensor.num_weeks() : 0; }
size_t rr_tensor_nodes(const rr_tensor* t) { return t ? t->tensor.num_nodes() : 0; }

rr_status rr_tensor_data(const rr_tensor* t, double* out, size_t cap) {
    if (!t) return invalid("null argument");
    return copy_out(t->tensor.values, out, cap);
}

void rr_tensor_free(rr_tensor* t) { delete t; }

rr_status rr_model_load(const char* model_bin, const char* model_json, const rr_graph* graph, rr_model** out) {
    if (!model_bin || !model_json || !graph || !out) return invalid("null argument");
    *out = nullptr;
    return guarded([&] {
        auto loaded = roadrisk::nn::load_params(model_bin, model_json);
        auto mc = roadrisk::nn::ModelConfig::from_json(loaded.meta.at("model"));
        *out = new rr_model{roadrisk::nn::Model(mc, roadrisk::dense_adjacency(graph->graph)), std::move(loaded.params)};
    });
}

size_t rr_model_t_in(const rr_model* m) { return m ? m->model.config().t_in : 0; }
size_t rr_model_t_out(const rr_model* m) { return m ? m->model.config().t_out : 0; }

rr_status rr_model_forward(const rr_model* m, const double* x, size_t batch, double* out, size_t cap) {
    if (!m || !x || !out || batch == 0) return invalid("null argument");
    const auto& mc = m->model.config();
    const size_t n = m->model.num_nodes();
    if (cap < batch * n * mc.t_out) return invalid("output buffer too small");
    return guarded([&] {
        using namespace roadrisk::nn;
        Tensor in({batch, n, mc.t_in, 3}, std::vector<double>(x, x + batch * n * mc.t_in * 3));
        Tape tape;
        BoundParams p(tape, m->params, false);
        const Tensor y = m->model.forward(p, tape.constant(in)).value();
        std::copy(y.values().begin(), y.values().end(), out);
    });
}

void rr_model_free(rr_model* m) { delete m; }

double rr_haversine_m(double lon1, double lat1, double lon2, double lat2) {
    return roadrisk::haversine_m({lon1, lat1}, {lon2, lat2});
}

rr_status rr_metrics(const double* y_hat, const double* y, size_t n, double eps, double* mae, double* rmse,
                     double* mape_percent, double* masked_fraction) {
    if (!y_hat || !y || n == 0) return invalid("null or empty input");
    return guarded([&] {
        std::span<const double> a(y_hat, n), b(y, n);
        if (mae) *mae = roadrisk::mae(a, b);
        if (rmse) *rmse = roadrisk::rmse(a, b);
        double pct = std::numeric_limits<double>::quiet_NaN(), frac = 1.0;
        try {
            const auto r = roadrisk::mape(a, b, eps);
            pct = r.percent;
            frac = r.masked_fraction;
        } catch (const roadrisk::Error& e) {
            if (e.code() != "AllMasked") throw;
        }
        if (mape_percent) *mape_percent = pct;
        if (masked_fraction) *masked_fraction = frac;
    });
}

rr_status rr_classify_zones(const double* values, size_t n, int* zones, double* percentile) {
    if ((!values || !zones) && n > 0) return invalid("null argument");
    return guarded([&] {
        const auto map = roadrisk::classify_zones("", std::span<const double>(values, n));
        for (size_t i = 0; i < n; ++i) {
            zones[i] = static_cast<int>(map.zones[i]);
            if (percentile) percentile[i] = map.percentile[i];
        }
    });
}

} // extern "C"
