// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Dense reference for graph diffusion, shared by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <vector>

#include "spatial_graph.hpp"

namespace roadrisk::diffusion_oracle {

using Dense = std::vector<std::vector<double>>;

inline Dense to_dense(const SparseMatrix& m) {
    Dense d(m.size(), std::vector<double>(m.size(), 0.0));
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j) d[i][j] = m.at(i, j);
    return d;
}

// Brute-force reference: repeated dense matrix-vector products then fusion.
inline std::vector<double> oracle(const Dense& a, std::vector<double> x, double alpha, int iters, double beta,
                                  bool fuse_each_step) {
    const std::vector<double> orig = x;
    const std::size_t n = x.size();
    for (int l = 0; l < iters; ++l) {
        std::vector<double> ax(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) ax[i] += a[i][j] * x[j];
        for (std::size_t i = 0; i < n; ++i) x[i] = (1.0 - alpha) * x[i] + alpha * ax[i];
        if (fuse_each_step)
            for (std::size_t i = 0; i < n; ++i) x[i] = beta * x[i] + (1.0 - beta) * orig[i];
    }
    if (!fuse_each_step)
        for (std::size_t i = 0; i < n; ++i) x[i] = beta * x[i] + (1.0 - beta) * orig[i];
    return x;
}

inline double max_abs(const std::vector<double>& x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::fabs(v));
    return m;
}

inline double l2(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

} // namespace roadrisk::diffusion_oracle
