/* SPDX-FileCopyrightText: (c) 2026 roadrisk developers
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ROADRISK_H
#define ROADRISK_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define RR_API __declspec(dllexport)
#else
#define RR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. The first four double as CLI exit codes. */
typedef enum rr_status {
    RR_OK = 0,
    RR_ERR_CONFIG = 2,
    RR_ERR_DATA = 3,
    RR_ERR_NUMERIC = 4,
    RR_ERR_IO = 5,
    RR_ERR_MISSING_ARTIFACT = 6,
    RR_ERR_INVALID_ARGUMENT = 7,
    RR_ERR_INTERNAL = 8
} rr_status;

typedef struct rr_config rr_config;
typedef struct rr_graph rr_graph;
typedef struct rr_tensor rr_tensor;
typedef struct rr_model rr_model;

RR_API const char* rr_version(void);

/* Message and short error tag of the last failure on the calling thread.
 * Valid until the next failing call on that thread. */
RR_API const char* rr_last_error(void);
RR_API const char* rr_last_error_code(void);

/* Process exit code for a status: 0, 2 (config), 3 (data, io, missing
 * artifact) or 4 (numeric). Invalid arguments map to 2, internal errors to 1. */
RR_API int rr_exit_code(rr_status status);

/* 0 quiet, 1 normal, 2 verbose. Logs go to stderr. */
RR_API void rr_set_log_level(int level);

/* ---- run configuration */
RR_API rr_status rr_config_load(const char* path, rr_config** out);
RR_API rr_status rr_config_from_string(const char* text, const char* base_dir, rr_config** out);
RR_API rr_status rr_config_set(rr_config* cfg, const char* key, const char* value);
/* Copies the value with a trailing NUL. `needed` receives the required
 * buffer size including the NUL; RR_ERR_INVALID_ARGUMENT when the key is unset
 * or `cap` is too small. */
RR_API rr_status rr_config_get(const rr_config* cfg, const char* key, char* buf, size_t cap, size_t* needed);
/* Writes 16 hex digits and a NUL. */
RR_API rr_status rr_config_hash(const rr_config* cfg, char out[17]);
RR_API void rr_config_free(rr_config* cfg);

/* ---- pipeline commands */
RR_API size_t rr_command_count(void);
RR_API const char* rr_command_name(size_t index);
RR_API rr_status rr_cmd_run(const rr_config* cfg, const char* command);
/* Writes the seeded synthetic accident CSV. */
RR_API rr_status rr_synth_write(const char* path, uint64_t seed);

/* ---- spatial graph */
/* Snaps points to square cells of `cell_size_m` metres and builds the kNN
 * Gaussian graph over occupied cells. `sigma` <= 0 selects it from the data. */
RR_API rr_status rr_graph_from_points(const double* lon, const double* lat, size_t n, double cell_size_m, int k,
                                      double sigma, rr_graph** out);
RR_API rr_status rr_graph_load(const char* nodes_csv, const char* edges_csv, rr_graph** out);
RR_API size_t rr_graph_num_nodes(const rr_graph* g);
RR_API size_t rr_graph_num_edges(const rr_graph* g); /* undirected */
/* Dense row-major n*n copy of the weights, or of the normalized matrix. */
RR_API rr_status rr_graph_adjacency(const rr_graph* g, int normalized, double* out, size_t cap);
RR_API void rr_graph_free(rr_graph* g);

/* ---- risk tensors [weeks, nodes, 3] */
RR_API rr_status rr_tensor_load(const char* bin_path, const char* json_path, rr_tensor** out);
RR_API size_t rr_tensor_weeks(const rr_tensor* t);
RR_API size_t rr_tensor_nodes(const rr_tensor* t);
RR_API rr_status rr_tensor_data(const rr_tensor* t, double* out, size_t cap);
RR_API void rr_tensor_free(rr_tensor* t);

/* ---- trained model */
RR_API rr_status rr_model_load(const char* model_bin, const char* model_json, const rr_graph* graph, rr_model** out);
RR_API size_t rr_model_t_in(const rr_model* m);
RR_API size_t rr_model_t_out(const rr_model* m);
/* x: [batch, nodes, t_in, 3] scaled inputs; out: [batch, nodes, t_out]. */
RR_API rr_status rr_model_forward(const rr_model* m, const double* x, size_t batch, double* out, size_t cap);
RR_API void rr_model_free(rr_model* m);

/* ---- utilities */
RR_API double rr_haversine_m(double lon1, double lat1, double lon2, double lat2);
/* Masked MAPE excludes cells with |y| <= eps. mape_percent is NaN when every
 * cell is masked; the call still succeeds. */
RR_API rr_status rr_metrics(const double* y_hat, const double* y, size_t n, double eps, double* mae, double* rmse,
                            double* mape_percent, double* masked_fraction);
/* zones: 0 no risk, 1..5 very low..very high; percentile may be NULL. */
RR_API rr_status rr_classify_zones(const double* values, size_t n, int* zones, double* percentile);

#ifdef __cplusplus
}
#endif

#endif
