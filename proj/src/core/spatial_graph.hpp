// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "accident.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

namespace roadrisk {

inline constexpr double kEarthRadiusM = 6371000.0;

struct GeoPoint {
    double lon = 0.0;
    double lat = 0.0;
};

// Great-circle distance in metres.
double haversine_m(GeoPoint a, GeoPoint b);

// Equirectangular projection about `origin`, in metres. Adequate at city
// scale, which is all it is used for.
class LocalProjection {
public:
    explicit LocalProjection(GeoPoint origin);
    std::pair<double, double> to_xy(GeoPoint p) const;
    GeoPoint origin() const { return origin_; }

private:
    GeoPoint origin_;
    double cos_lat_;
};

struct GraphNode {
    int id = 0;
    GeoPoint centroid;
    std::size_t member_count = 0;
};

struct NodeAssignment {
    std::vector<GraphNode> nodes;
    std::vector<int> node_of_record;
    GeoPoint origin;
    double cell_size_m = 0.0;
};

// Square-grid clustering: every non-empty cell of side cell_size_m becomes a
// node at the mean lon/lat of its members. Nodes are numbered by (row, col)
// of their cell. The projection origin defaults to the centroid of `points`.
NodeAssignment assign_points_to_cells(std::span<const GeoPoint> points, double cell_size_m,
                                      std::optional<GeoPoint> origin = std::nullopt);
NodeAssignment assign_to_nodes(std::span<const AccidentRecord> records, double cell_size_m);

// Square sparse matrix in compressed-row form with sorted column indices.
class SparseMatrix {
public:
    SparseMatrix() = default;
    // Entries with the same (row, col) are not allowed.
    SparseMatrix(std::size_t n, std::vector<std::tuple<int, int, double>> entries);

    std::size_t size() const { return n_; }
    std::size_t nnz() const { return values_.size(); }
    double at(std::size_t i, std::size_t j) const;
    std::span<const int> row_cols(std::size_t i) const;
    std::span<const double> row_values(std::size_t i) const;

    // y = M x
    void multiply(std::span<const double> x, std::span<double> y) const;
    std::vector<double> row_sums() const;
    std::vector<double> dense() const; // row-major n*n
    bool is_symmetric() const;

private:
    std::size_t n_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<int> cols_;
    std::vector<double> values_;
};

struct Adjacency {
    SparseMatrix weights;
    double sigma = 0.0;
    std::size_t knn_links = 0; // directed kNN links before symmetrisation
};

// Gaussian kernel over each node's k nearest neighbours (ties by ascending
// id), symmetrised with an elementwise max. sigma defaults to the median
// kNN distance.
Adjacency build_adjacency(std::span<const GraphNode> nodes, int k, std::optional<double> sigma = std::nullopt);

// D^-1/2 A D^-1/2. Throws Data/ZeroDegreeNode for an isolated node.
SparseMatrix normalize_sym(const SparseMatrix& adjacency);

struct SpatialGraph {
    std::vector<GraphNode> nodes;
    SparseMatrix adjacency;
    SparseMatrix normalized;
    std::vector<double> degree;
    int k = 4;
    double sigma = 0.0;
    double cell_size_m = 150.0;
    std::size_t knn_links = 0;

    static SpatialGraph build(std::vector<GraphNode> nodes, int k, std::optional<double> sigma, double cell_size_m);

    std::size_t num_nodes() const { return nodes.size(); }
    std::size_t undirected_edges() const { return adjacency.nnz() / 2; }
    std::size_t directed_edges() const { return adjacency.nnz(); }
    std::vector<int> node_ids() const;

    // nodes CSV (id, lon, lat, member_count) and edges CSV (i, j, weight,
    // normalized_weight), one row per undirected edge with i < j.
    void save(const std::filesystem::path& nodes_csv, const std::filesystem::path& edges_csv,
              const std::string& config_hash = {}) const;
    static SpatialGraph load(const std::filesystem::path& nodes_csv, const std::filesystem::path& edges_csv);
};

} // namespace roadrisk
