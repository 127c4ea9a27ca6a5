// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#include "spatial_graph.hpp"

#include "csv.hpp"
#include "error.hpp"
#include "util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

namespace roadrisk {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
}

double haversine_m(GeoPoint a, GeoPoint b) {
    const double phi1 = a.lat * kDegToRad;
    const double phi2 = b.lat * kDegToRad;
    const double dphi = (b.lat - a.lat) * kDegToRad;
    const double dlambda = (b.lon - a.lon) * kDegToRad;
    const double s1 = std::sin(dphi / 2.0);
    const double s2 = std::sin(dlambda / 2.0);
    const double h = std::min(1.0, s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2);
    return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

LocalProjection::LocalProjection(GeoPoint origin) : origin_(origin), cos_lat_(std::cos(origin.lat * kDegToRad)) {}

std::pair<double, double> LocalProjection::to_xy(GeoPoint p) const {
    return {kEarthRadiusM * (p.lon - origin_.lon) * kDegToRad * cos_lat_,
            kEarthRadiusM * (p.lat - origin_.lat) * kDegToRad};
}

NodeAssignment assign_points_to_cells(std::span<const GeoPoint> points, double cell_size_m,
                                      std::optional<GeoPoint> origin) {
    if (points.empty()) fail(ErrorKind::Data, "EmptyInput", "no points to assign");
    if (!(cell_size_m > 0.0)) fail(ErrorKind::InvalidArgument, "InvalidCellSize", "cell size must be > 0");
    if (!origin) {
        GeoPoint c{0.0, 0.0};
        for (const auto& p : points) {
            c.lon += p.lon;
            c.lat += p.lat;
        }
        c.lon /= static_cast<double>(points.size());
        c.lat /= static_cast<double>(points.size());
        origin = c;
    }
    const LocalProjection proj(*origin);

    std::vector<std::pair<long long, long long>> cell_of(points.size());
    std::map<std::pair<long long, long long>, int> cell_index;
    for (std::size_t k = 0; k < points.size(); ++k) {
        auto [x, y] = proj.to_xy(points[k]);
        const auto cx = static_cast<long long>(std::floor(x / cell_size_m));
        const auto cy = static_cast<long long>(std::floor(y / cell_size_m));
        cell_of[k] = {cy, cx};
        cell_index.emplace(cell_of[k], 0);
    }
    int next = 0;
    for (auto& [cell, id] : cell_index) id = next++;

    NodeAssignment out;
    out.origin = *origin;
    out.cell_size_m = cell_size_m;
    out.nodes.resize(cell_index.size());
    std::vector<double> sum_lon(cell_index.size(), 0.0), sum_lat(cell_index.size(), 0.0);
    out.node_of_record.resize(points.size());
    for (std::size_t k = 0; k < points.size(); ++k) {
        const int id = cell_index.at(cell_of[k]);
        out.node_of_record[k] = id;
        sum_lon[static_cast<std::size_t>(id)] += points[k].lon;
        sum_lat[static_cast<std::size_t>(id)] += points[k].lat;
        ++out.nodes[static_cast<std::size_t>(id)].member_count;
    }
    for (std::size_t i = 0; i < out.nodes.size(); ++i) {
        auto& n = out.nodes[i];
        n.id = static_cast<int>(i);
        const auto m = static_cast<double>(n.member_count);
        n.centroid = {sum_lon[i] / m, sum_lat[i] / m};
    }
    return out;
}

NodeAssignment assign_to_nodes(std::span<const AccidentRecord> records, double cell_size_m) {
    std::vector<GeoPoint> pts;
    pts.reserve(records.size());
    for (const auto& r : records) pts.push_back({r.lon, r.lat});
    return assign_points_to_cells(pts, cell_size_m);
}

SparseMatrix::SparseMatrix(std::size_t n, std::vector<std::tuple<int, int, double>> entries) : n_(n) {
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
    });
    row_ptr_.assign(n + 1, 0);
    cols_.reserve(entries.size());
    values_.reserve(entries.size());
    for (std::size_t e = 0; e < entries.size(); ++e) {
        const auto [i, j, v] = entries[e];
        if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= n || static_cast<std::size_t>(j) >= n)
            fail(ErrorKind::InvalidArgument, "ShapeMismatch", "sparse entry outside matrix");
        if (e > 0 && std::get<0>(entries[e - 1]) == i && std::get<1>(entries[e - 1]) == j)
            fail(ErrorKind::InvalidArgument, "DuplicateEntry", "duplicate sparse entry");
        ++row_ptr_[static_cast<std::size_t>(i) + 1];
        cols_.push_back(j);
        values_.push_back(v);
    }
    for (std::size_t i = 0; i < n; ++i) row_ptr_[i + 1] += row_ptr_[i];
}

double SparseMatrix::at(std::size_t i, std::size_t j) const {
    auto cols = row_cols(i);
    auto it = std::lower_bound(cols.begin(), cols.end(), static_cast<int>(j));
    if (it == cols.end() || *it != static_cast<int>(j)) return 0.0;
    return values_[row_ptr_[i] + static_cast<std::size_t>(it - cols.begin())];
}

std::span<const int> SparseMatrix::row_cols(std::size_t i) const {
    return {cols_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
}

std::span<const double> SparseMatrix::row_values(std::size_t i) const {
    return {values_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
    if (x.size() != n_ || y.size() != n_) fail(ErrorKind::InvalidArgument, "ShapeMismatch", "sparse multiply");
    for (std::size_t i = 0; i < n_; ++i) {
        double acc = 0.0;
        for (std::size_t e = row_ptr_[i]; e < row_ptr_[i + 1]; ++e)
            acc += values_[e] * x[static_cast<std::size_t>(cols_[e])];
        y[i] = acc;
    }
}

std::vector<double> SparseMatrix::row_sums() const {
    std::vector<double> s(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t e = row_ptr_[i]; e < row_ptr_[i + 1]; ++e) s[i] += values_[e];
    return s;
}

std::vector<double> SparseMatrix::dense() const {
    std::vector<double> d(n_ * n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t e = row_ptr_[i]; e < row_ptr_[i + 1]; ++e)
            d[i * n_ + static_cast<std::size_t>(cols_[e])] = values_[e];
    return d;
}

bool SparseMatrix::is_symmetric() const {
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t e = row_ptr_[i]; e < row_ptr_[i + 1]; ++e)
            if (at(static_cast<std::size_t>(cols_[e]), i) != values_[e]) return false;
    return true;
}

Adjacency build_adjacency(std::span<const GraphNode> nodes, int k, std::optional<double> sigma) {
    const std::size_t n = nodes.size();
    if (k < 1 || static_cast<std::size_t>(k) >= n)
        fail(ErrorKind::InvalidArgument, "InvalidNeighbourCount",
             "need N > k >= 1 (N=" + std::to_string(n) + ", k=" + std::to_string(k) + ")");
    if (sigma && !(*sigma > 0.0)) fail(ErrorKind::InvalidArgument, "InvalidSigma", "sigma must be > 0");

    // neighbours[i] = k nearest (distance, index), ties broken by node id.
    std::vector<std::vector<std::pair<double, std::size_t>>> neighbours(n);
    std::vector<double> knn_distances;
    knn_distances.reserve(n * static_cast<std::size_t>(k));
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t i = 0; i < n; ++i) {
        cand.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double d = haversine_m(nodes[i].centroid, nodes[j].centroid);
            if (d == 0.0)
                fail(ErrorKind::Data, "DegenerateGeometry",
                     "nodes " + std::to_string(nodes[i].id) + " and " + std::to_string(nodes[j].id) +
                         " coincide; merge them first");
            cand.emplace_back(d, j);
        }
        std::partial_sort(cand.begin(), cand.begin() + k, cand.end(), [&](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first < b.first;
            return nodes[a.second].id < nodes[b.second].id;
        });
        neighbours[i].assign(cand.begin(), cand.begin() + k);
        for (const auto& [d, j] : neighbours[i]) knn_distances.push_back(d);
    }

    Adjacency out;
    if (sigma) {
        out.sigma = *sigma;
    } else {
        std::sort(knn_distances.begin(), knn_distances.end());
        const std::size_t m = knn_distances.size();
        out.sigma = m % 2 ? knn_distances[m / 2] : 0.5 * (knn_distances[m / 2 - 1] + knn_distances[m / 2]);
    }

    std::map<std::pair<int, int>, double> sym;
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& [d, j] : neighbours[i]) {
            double w = std::exp(-(d * d) / (2.0 * out.sigma * out.sigma));
            // Far neighbours must not vanish from the edge set through underflow.
            w = std::max(w, std::numeric_limits<double>::min());
            const int a = static_cast<int>(i), b = static_cast<int>(j);
            for (auto key : {std::pair{a, b}, std::pair{b, a}}) {
                auto [it, inserted] = sym.emplace(key, w);
                if (!inserted) it->second = std::max(it->second, w);
            }
            ++out.knn_links;
        }
    }
    std::vector<std::tuple<int, int, double>> entries;
    entries.reserve(sym.size());
    for (const auto& [key, w] : sym) entries.emplace_back(key.first, key.second, w);
    out.weights = SparseMatrix(n, std::move(entries));
    return out;
}

SparseMatrix normalize_sym(const SparseMatrix& adjacency) {
    const auto degree = adjacency.row_sums();
    for (std::size_t i = 0; i < degree.size(); ++i)
        if (!(degree[i] > 0.0)) fail(ErrorKind::Data, "ZeroDegreeNode", "node " + std::to_string(i) + " is isolated");
    std::vector<std::tuple<int, int, double>> entries;
    entries.reserve(adjacency.nnz());
    for (std::size_t i = 0; i < adjacency.size(); ++i) {
        auto cols = adjacency.row_cols(i);
        auto vals = adjacency.row_values(i);
        for (std::size_t e = 0; e < cols.size(); ++e) {
            const auto j = static_cast<std::size_t>(cols[e]);
            entries.emplace_back(static_cast<int>(i), cols[e], vals[e] / std::sqrt(degree[i] * degree[j]));
        }
    }
    return SparseMatrix(adjacency.size(), std::move(entries));
}

SpatialGraph SpatialGraph::build(std::vector<GraphNode> nodes, int k, std::optional<double> sigma,
                                 double cell_size_m) {
    SpatialGraph g;
    auto adj = build_adjacency(nodes, k, sigma);
    g.nodes = std::move(nodes);
    g.adjacency = std::move(adj.weights);
    g.normalized = normalize_sym(g.adjacency);
    g.degree = g.adjacency.row_sums();
    g.k = k;
    g.sigma = adj.sigma;
    g.cell_size_m = cell_size_m;
    g.knn_links = adj.knn_links;
    return g;
}

std::vector<int> SpatialGraph::node_ids() const {
    std::vector<int> ids;
    ids.reserve(nodes.size());
    for (const auto& n : nodes) ids.push_back(n.id);
    return ids;
}

void SpatialGraph::save(const std::filesystem::path& nodes_csv, const std::filesystem::path& edges_csv,
                        const std::string& config_hash) const {
    std::ostringstream ns;
    if (!config_hash.empty()) ns << "# config_hash=" << config_hash << '\n';
    ns << "# k=" << k << " sigma=" << format_double(sigma) << " cell_size=" << format_double(cell_size_m)
       << " knn_links=" << knn_links << '\n';
    ns << "id,lon,lat,member_count\n";
    for (const auto& n : nodes)
        ns << n.id << ',' << format_double(n.centroid.lon) << ',' << format_double(n.centroid.lat) << ','
           << n.member_count << '\n';
    write_file(nodes_csv, ns.str());

    std::ostringstream es;
    if (!config_hash.empty()) es << "# config_hash=" << config_hash << '\n';
    es << "i,j,weight,normalized_weight\n";
    for (std::size_t i = 0; i < adjacency.size(); ++i) {
        auto cols = adjacency.row_cols(i);
        auto vals = adjacency.row_values(i);
        for (std::size_t e = 0; e < cols.size(); ++e) {
            const auto j = static_cast<std::size_t>(cols[e]);
            if (j <= i) continue;
            es << i << ',' << j << ',' << format_double(vals[e]) << ',' << format_double(normalized.at(i, j)) << '\n';
        }
    }
    write_file(edges_csv, es.str());
}

namespace {

void parse_graph_params(const std::filesystem::path& nodes_csv, SpatialGraph& g) {
    std::istringstream in(read_file(nodes_csv));
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("# k=", 0) != 0) continue;
        std::istringstream kv(line.substr(2));
        std::string tok;
        while (kv >> tok) {
            auto eq = tok.find('=');
            if (eq == std::string::npos) continue;
            const auto key = tok.substr(0, eq);
            const auto val = tok.substr(eq + 1);
            if (key == "k") g.k = static_cast<int>(parse_int(val).value_or(g.k));
            if (key == "sigma") g.sigma = parse_double(val).value_or(0.0);
            if (key == "cell_size") g.cell_size_m = parse_double(val).value_or(0.0);
            if (key == "knn_links") g.knn_links = static_cast<std::size_t>(parse_int(val).value_or(0));
        }
    }
}

} // namespace

SpatialGraph SpatialGraph::load(const std::filesystem::path& nodes_csv, const std::filesystem::path& edges_csv) {
    auto nt = read_csv_table(nodes_csv);
    auto et = read_csv_table(edges_csv);
    SpatialGraph g;
    parse_graph_params(nodes_csv, g);
    const auto c_id = nt.column("id"), c_lon = nt.column("lon"), c_lat = nt.column("lat"),
               c_m = nt.column("member_count");
    auto bad = [&](const std::filesystem::path& p) { fail(ErrorKind::Data, "CorruptArtifact", p.string()); };
    for (const auto& row : nt.rows) {
        auto id = parse_int(row[c_id]);
        auto lon = parse_double(row[c_lon]);
        auto lat = parse_double(row[c_lat]);
        auto m = parse_int(row[c_m]);
        if (!id || !lon || !lat || !m) bad(nodes_csv);
        if (*id != static_cast<long long>(g.nodes.size())) bad(nodes_csv);
        g.nodes.push_back({static_cast<int>(*id), {*lon, *lat}, static_cast<std::size_t>(*m)});
    }
    const auto c_i = et.column("i"), c_j = et.column("j"), c_w = et.column("weight"),
               c_nw = et.column("normalized_weight");
    std::vector<std::tuple<int, int, double>> a, an;
    for (const auto& row : et.rows) {
        auto i = parse_int(row[c_i]);
        auto j = parse_int(row[c_j]);
        auto w = parse_double(row[c_w]);
        auto nw = parse_double(row[c_nw]);
        if (!i || !j || !w || !nw) bad(edges_csv);
        const int ii = static_cast<int>(*i), jj = static_cast<int>(*j);
        a.emplace_back(ii, jj, *w);
        a.emplace_back(jj, ii, *w);
        an.emplace_back(ii, jj, *nw);
        an.emplace_back(jj, ii, *nw);
    }
    g.adjacency = SparseMatrix(g.nodes.size(), std::move(a));
    g.normalized = SparseMatrix(g.nodes.size(), std::move(an));
    g.degree = g.adjacency.row_sums();
    return g;
}

} // namespace roadrisk
