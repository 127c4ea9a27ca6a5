// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#include "framework_validation.hpp"

#include "error.hpp"
#include "spatial_graph.hpp"
#include "util.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace roadrisk {

using nlohmann::json;

namespace {

const char* const kDimNames[3] = {"traffic_safety", "infrastructure", "environmental"};

double mean_of(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

} // namespace

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) fail(ErrorKind::InvalidArgument, "ShapeMismatch", "pearson operands differ in length");
    if (x.size() < 2) return std::nullopt;
    const double mx = mean_of(x), my = mean_of(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0 && syy > 0.0)) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<double> lag1_autocorrelation(std::span<const double> x) {
    if (x.size() < 3) return std::nullopt;
    const double m = mean_of(x);
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        den += (x[t] - m) * (x[t] - m);
        if (t + 1 < x.size()) num += (x[t] - m) * (x[t + 1] - m);
    }
    if (!(den > 0.0)) return std::nullopt;
    return num / den;
}

std::optional<double> coefficient_of_variation(std::span<const double> x) {
    if (x.size() < 2) return std::nullopt;
    const double m = mean_of(x);
    if (m == 0.0) return std::nullopt;
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return 100.0 * std::sqrt(ss / static_cast<double>(x.size() - 1)) / m;
}

CorrelationResult cross_dimension_correlation(const RiskTensor& tensor) {
    if (tensor.num_weeks() < 3) fail(ErrorKind::Data, "InsufficientHistory", "correlation needs >= 3 weeks");
    std::array<std::vector<double>, 3> dims;
    for (std::size_t t = 0; t < tensor.num_weeks(); ++t)
        for (std::size_t i = 0; i < tensor.num_nodes(); ++i) {
            if (tensor.at(t, i, 0) == 0.0 && tensor.at(t, i, 1) == 0.0 && tensor.at(t, i, 2) == 0.0) continue;
            for (std::size_t f = 0; f < 3; ++f) dims[f].push_back(tensor.at(t, i, f));
        }
    CorrelationResult r;
    r.active_cells = dims[0].size();
    static const std::array<std::pair<int, int>, 3> pairs{{{0, 1}, {0, 2}, {1, 2}}};
    for (std::size_t p = 0; p < 3; ++p) {
        const auto [a, b] = pairs[p];
        r.pair_r[p] = pearson(dims[a], dims[b]);
        if (!r.pair_r[p])
            r.notes.push_back(std::string("DegenerateVariance: pair ") + kDimNames[a] + "/" + kDimNames[b] + " skipped");
    }
    for (int f = 0; f < 3; ++f) {
        double s = 0.0;
        int n = 0;
        for (std::size_t p = 0; p < 3; ++p) {
            if ((pairs[p].first != f && pairs[p].second != f) || !r.pair_r[p]) continue;
            s += std::fabs(*r.pair_r[p]);
            ++n;
        }
        if (n > 0) r.mean_abs_r[f] = s / n;
    }
    return r;
}

TemporalStats temporal_stats(const RiskTensor& tensor) {
    const std::size_t W = tensor.num_weeks(), N = tensor.num_nodes();
    if (N == 0) fail(ErrorKind::Data, "EmptyInput", "tensor has no nodes");
    TemporalStats s;
    for (std::size_t f = 0; f < 3; ++f) {
        std::vector<double> series(W, 0.0);
        for (std::size_t t = 0; t < W; ++t) {
            for (std::size_t i = 0; i < N; ++i) series[t] += tensor.at(t, i, f);
            series[t] /= static_cast<double>(N);
        }
        s.cv_percent[f] = coefficient_of_variation(series);
        if (!s.cv_percent[f]) s.notes.push_back(std::string("ZeroMean: CV undefined for ") + kDimNames[f]);
        s.lag1[f] = lag1_autocorrelation(series);
        if (!s.lag1[f]) s.notes.push_back(std::string("ZeroVariance: autocorrelation undefined for ") + kDimNames[f]);
    }
    return s;
}

IccEstimate icc_oneway(const std::vector<std::vector<double>>& groups) {
    std::vector<const std::vector<double>*> kept;
    for (const auto& g : groups)
        if (g.size() >= 2) kept.push_back(&g);
    if (kept.size() < 2)
        fail(ErrorKind::Data, "InsufficientGroups", "ICC needs >= 2 groups with >= 2 observations each");
    const double k = static_cast<double>(kept.size());
    double total = 0.0, n_total = 0.0, sum_n2 = 0.0;
    for (const auto* g : kept) {
        for (double v : *g) total += v;
        n_total += static_cast<double>(g->size());
        sum_n2 += static_cast<double>(g->size()) * static_cast<double>(g->size());
    }
    const double grand = total / n_total;
    double ssb = 0.0, ssw = 0.0;
    for (const auto* g : kept) {
        const double m = mean_of(*g);
        ssb += static_cast<double>(g->size()) * (m - grand) * (m - grand);
        for (double v : *g) ssw += (v - m) * (v - m);
    }
    const double msb = ssb / (k - 1.0);
    const double msw = ssw / (n_total - k);
    const double n0 = (n_total - sum_n2 / n_total) / (k - 1.0);
    IccEstimate e;
    e.groups = kept.size();
    e.within = msw;
    e.between = (msb - msw) / n0;
    if (e.between < 0.0) {
        e.between = 0.0;
        e.clamped = true;
    }
    const double denom = e.between + e.within;
    e.icc = denom > 0.0 ? e.between / denom : 0.0;
    return e;
}

IccResult icc_grid(const RiskTensor& cell_tensor) {
    IccResult r;
    for (std::size_t f = 0; f < 3; ++f) {
        std::vector<std::vector<double>> groups(cell_tensor.num_nodes());
        for (std::size_t i = 0; i < cell_tensor.num_nodes(); ++i)
            for (std::size_t t = 0; t < cell_tensor.num_weeks(); ++t)
                if (cell_tensor.at(t, i, 0) > 0.0) groups[i].push_back(cell_tensor.at(t, i, f));
        try {
            const auto e = icc_oneway(groups);
            r.icc[f] = e.icc;
            r.groups[f] = e.groups;
            if (e.clamped) r.notes.push_back(std::string("negative between-cell variance clamped to 0 for ") + kDimNames[f]);
        } catch (const Error& e) {
            if (e.code() != "InsufficientGroups") throw;
            r.notes.push_back(std::string("InsufficientGroups for ") + kDimNames[f]);
        }
    }
    return r;
}

double ols_r2(const std::vector<std::vector<double>>& columns, std::span<const double> target, bool* ridge_used) {
    const std::size_t n = target.size(), p = columns.size() + 1;
    for (const auto& c : columns)
        if (c.size() != n) fail(ErrorKind::InvalidArgument, "ShapeMismatch", "regressor length differs from target");
    if (n < p) fail(ErrorKind::Data, "RankDeficient", "fewer rows than coefficients");
    auto x = [&](std::size_t row, std::size_t j) { return j == 0 ? 1.0 : columns[j - 1][row]; };
    std::vector<double> xtx(p * p, 0.0), xty(p, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t a = 0; a < p; ++a) {
            xty[a] += x(r, a) * target[r];
            for (std::size_t b = 0; b < p; ++b) xtx[a * p + b] += x(r, a) * x(r, b);
        }
    auto cholesky_solve = [&](double ridge, std::vector<double>& beta) {
        std::vector<double> l(p * p, 0.0);
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j <= i; ++j) {
                double s = xtx[i * p + j] + (i == j ? ridge : 0.0);
                for (std::size_t k = 0; k < j; ++k) s -= l[i * p + k] * l[j * p + k];
                if (i == j) {
                    // Pivot relative to the diagonal scale guards against
                    // numerically singular systems.
                    if (!(s > 1e-12 * std::max(1.0, std::fabs(xtx[i * p + i])))) return false;
                    l[i * p + i] = std::sqrt(s);
                } else {
                    l[i * p + j] = s / l[j * p + j];
                }
            }
        std::vector<double> z(p);
        for (std::size_t i = 0; i < p; ++i) {
            double s = xty[i];
            for (std::size_t k = 0; k < i; ++k) s -= l[i * p + k] * z[k];
            z[i] = s / l[i * p + i];
        }
        beta.assign(p, 0.0);
        for (std::size_t i = p; i-- > 0;) {
            double s = z[i];
            for (std::size_t k = i + 1; k < p; ++k) s -= l[k * p + i] * beta[k];
            beta[i] = s / l[i * p + i];
        }
        return true;
    };
    std::vector<double> beta;
    bool ridge = false;
    if (!cholesky_solve(0.0, beta)) {
        ridge = true;
        double lambda = 1e-8;
        while (!cholesky_solve(lambda, beta)) {
            lambda *= 10.0;
            if (lambda > 1e6) fail(ErrorKind::Numeric, "RankDeficient", "normal equations unsolvable");
        }
    }
    if (ridge_used) *ridge_used = ridge;
    const double my = mean_of(target);
    double sst = 0.0, ssr = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        double pred = 0.0;
        for (std::size_t j = 0; j < p; ++j) pred += beta[j] * x(r, j);
        ssr += (target[r] - pred) * (target[r] - pred);
        sst += (target[r] - my) * (target[r] - my);
    }
    if (!(sst > 0.0)) return 1.0;
    return 1.0 - ssr / sst;
}

R2Result hierarchical_r2(const RiskTensor& cell_tensor, std::span<const double> counts) {
    const std::size_t W = cell_tensor.num_weeks(), N = cell_tensor.num_nodes();
    if (counts.size() != W * N) fail(ErrorKind::InvalidArgument, "ShapeMismatch", "counts must be W x N");
    if (W < 2) fail(ErrorKind::Data, "InsufficientHistory", "next-week target needs >= 2 weeks");
    std::array<std::vector<double>, 3> x;
    std::vector<double> y;
    for (std::size_t t = 0; t + 1 < W; ++t)
        for (std::size_t i = 0; i < N; ++i) {
            for (std::size_t f = 0; f < 3; ++f) x[f].push_back(cell_tensor.at(t, i, f));
            y.push_back(counts[(t + 1) * N + i]);
        }
    R2Result r;
    r.rows = y.size();
    std::vector<std::vector<double>> cols;
    for (std::size_t k = 0; k < 3; ++k) {
        cols.push_back(x[k]);
        bool ridge = false;
        r.r2[k] = ols_r2(cols, y, &ridge);
        if (ridge) {
            r.ridge_used = true;
            r.notes.push_back("RankDeficient at step " + std::to_string(k + 1) + ": ridge fallback engaged");
        }
    }
    for (std::size_t k = 1; k < 3; ++k)
        r.relative_gain[k - 1] = r.r2[0] > 0.0 ? (r.r2[k] - r.r2[k - 1]) / r.r2[0] : 0.0;
    return r;
}

namespace {

json stat3(const std::array<Stat, 3>& s) {
    json j = json::object();
    for (std::size_t f = 0; f < 3; ++f) j[kDimNames[f]] = s[f] ? json(*s[f]) : json(nullptr);
    return j;
}

std::string fmt(const Stat& s) { return s ? format_double(*s) : std::string("NA"); }

} // namespace

json ValidationReport::to_json() const {
    std::array<Stat, 3> between;
    for (std::size_t f = 0; f < 3; ++f)
        if (icc.icc[f]) between[f] = 100.0 * *icc.icc[f];
    std::vector<std::string> notes;
    for (const auto* v : {&correlation.notes, &temporal.notes, &icc.notes, &r2.notes})
        notes.insert(notes.end(), v->begin(), v->end());
    return {{"cross_correlation_mean_abs_r", stat3(correlation.mean_abs_r)},
            {"pair_r", {{"traffic_infrastructure", correlation.pair_r[0] ? json(*correlation.pair_r[0]) : json(nullptr)},
                        {"traffic_environmental", correlation.pair_r[1] ? json(*correlation.pair_r[1]) : json(nullptr)},
                        {"infrastructure_environmental",
                         correlation.pair_r[2] ? json(*correlation.pair_r[2]) : json(nullptr)}}},
            {"coefficient_of_variation_percent", stat3(temporal.cv_percent)},
            {"lag1_autocorrelation", stat3(temporal.lag1)},
            {"icc", stat3(icc.icc)},
            {"between_grid_variance_percent", stat3(between)},
            {"incremental_r2", {{"base", r2.r2[0]}, {"plus_infrastructure", r2.r2[1]}, {"plus_environmental", r2.r2[2]}}},
            {"relative_improvement_percent",
             {{"infrastructure", 100.0 * r2.relative_gain[0]}, {"environmental", 100.0 * r2.relative_gain[1]}}},
            {"regression_rows", r2.rows},
            {"ridge_fallback", r2.ridge_used},
            {"active_cells", correlation.active_cells},
            {"grid_cells", cells},
            {"weeks", weeks},
            {"records", records},
            {"notes", notes}};
}

std::string ValidationReport::to_csv(const std::string& config_hash) const {
    std::ostringstream s;
    s << "# config_hash=" << config_hash << "\n";
    s << "analysis,metric,traffic_safety,infrastructure,environmental\n";
    s << "dimensional_independence,cross_correlation_mean_abs_r," << fmt(correlation.mean_abs_r[0]) << ','
      << fmt(correlation.mean_abs_r[1]) << ',' << fmt(correlation.mean_abs_r[2]) << '\n';
    s << "temporal_differentiation,coefficient_of_variation_percent," << fmt(temporal.cv_percent[0]) << ','
      << fmt(temporal.cv_percent[1]) << ',' << fmt(temporal.cv_percent[2]) << '\n';
    s << "temporal_differentiation,lag1_autocorrelation," << fmt(temporal.lag1[0]) << ',' << fmt(temporal.lag1[1])
      << ',' << fmt(temporal.lag1[2]) << '\n';
    s << "spatial_propagation,icc," << fmt(icc.icc[0]) << ',' << fmt(icc.icc[1]) << ',' << fmt(icc.icc[2]) << '\n';
    auto pct = [](const Stat& v) { return v ? Stat(100.0 * *v) : Stat(); };
    s << "spatial_propagation,between_grid_variance_percent," << fmt(pct(icc.icc[0])) << ',' << fmt(pct(icc.icc[1]))
      << ',' << fmt(pct(icc.icc[2])) << '\n';
    s << "predictive_complementarity,incremental_r2," << format_double(r2.r2[0]) << ','
      << format_double(r2.r2[1] - r2.r2[0]) << ',' << format_double(r2.r2[2] - r2.r2[1]) << '\n';
    s << "predictive_complementarity,relative_improvement_percent,base," << format_double(100.0 * r2.relative_gain[0])
      << ',' << format_double(100.0 * r2.relative_gain[1]) << '\n';
    return s.str();
}

ValidationReport validate_framework(const WeightTables& weights, const TemporalWeightConfig& tcfg,
                                    std::span<const AccidentRecord> records, std::span<const Date> weeks,
                                    double cell_size_m) {
    const NodeAssignment cells = assign_to_nodes(records, cell_size_m);
    std::vector<int> ids;
    for (const auto& n : cells.nodes) ids.push_back(n.id);
    const RiskTensor tensor = build_risk_tensor(weights, tcfg, records, cells.node_of_record, ids, weeks);
    const std::size_t N = ids.size();
    std::vector<double> counts(weeks.size() * N, 0.0);
    for (std::size_t k = 0; k < records.size(); ++k) {
        const Date ws = iso_week_start(records[k].date);
        const auto it = std::lower_bound(weeks.begin(), weeks.end(), ws);
        // build_risk_tensor has already rejected records outside `weeks`.
        counts[static_cast<std::size_t>(it - weeks.begin()) * N + static_cast<std::size_t>(cells.node_of_record[k])] += 1.0;
    }
    ValidationReport r;
    r.cells = N;
    r.weeks = weeks.size();
    r.records = records.size();
    r.correlation = cross_dimension_correlation(tensor);
    r.temporal = temporal_stats(tensor);
    r.icc = icc_grid(tensor);
    r.r2 = hierarchical_r2(tensor, counts);
    return r;
}

} // namespace roadrisk
