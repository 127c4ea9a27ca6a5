// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "../diffusion_oracle.hpp"
#include "diffusion.hpp"
#include "error.hpp"
#include "test_support.hpp"

using namespace roadrisk;
using namespace roadrisk::diffusion_oracle;

namespace {

RiskTensor random_tensor(std::size_t weeks, std::size_t nodes, std::mt19937_64& rng) {
    std::vector<Date> w;
    for (std::size_t t = 0; t < weeks; ++t) w.push_back(test::ymd(2010, 1, 4) + std::chrono::days{7 * t});
    std::vector<int> ids(nodes);
    for (std::size_t i = 0; i < nodes; ++i) ids[i] = static_cast<int>(i);
    RiskTensor t(w, ids);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    for (auto& v : t.values) v = u(rng);
    return t;
}

// Circulant graph where node i links to i +- 1..h: every degree is 2h.
SparseMatrix regular_graph(std::size_t n, std::size_t h, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> w(0.2, 1.0);
    const double weight = w(rng);
    std::vector<std::tuple<int, int, double>> e;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t s = 1; s <= h; ++s) {
            e.emplace_back(static_cast<int>(i), static_cast<int>((i + s) % n), weight);
            e.emplace_back(static_cast<int>(i), static_cast<int>((i + n - s) % n), weight);
        }
    return SparseMatrix(n, std::move(e));
}

} // namespace

TEST_SUITE("diffusion") {
    TEST_CASE("presets match the published configurations") {
        const auto& p = diffusion_presets();
        REQUIRE(p.size() == 8);
        const std::vector<std::string> names{"No_Diffusion",           "Uniform_Weak",     "Uniform_Medium",
                                             "Uniform_Strong",         "Differentiated_Current",
                                             "Differentiated_A",       "Differentiated_B", "Over_Diffusion"};
        const std::vector<std::array<double, 3>> alpha{{0, 0, 0},       {0.1, 0.1, 0.1}, {0.2, 0.2, 0.2},
                                                       {0.3, 0.3, 0.3}, {0.2, 0.2, 0.2}, {0.3, 0.1, 0.25},
                                                       {0.25, 0.15, 0.3}, {0.5, 0.4, 0.4}};
        const std::vector<std::array<int, 3>> iters{{0, 0, 0}, {1, 1, 1}, {1, 1, 1}, {2, 2, 2},
                                                    {1, 1, 1}, {2, 1, 2}, {1, 1, 2}, {3, 3, 3}};
        for (std::size_t i = 0; i < 8; ++i) {
            CHECK(p[i].name == names[i]);
            CHECK(p[i].alpha == alpha[i]);
            CHECK(p[i].iters == iters[i]);
            CHECK(p[i].beta == 0.7);
            CHECK(find_diffusion_preset(names[i]).has_value());
        }
        CHECK_FALSE(find_diffusion_preset("Nope"));
    }

    TEST_CASE("apply_diffusion equals the dense oracle") {
        std::mt19937_64 rng(21);
        for (int trial = 0; trial < 40; ++trial) {
            const std::size_t n = 2 + static_cast<std::size_t>(trial) % 9;
            const auto a = normalize_sym(test::random_connected_graph(n, rng));
            const auto dense = to_dense(a);
            const auto t = random_tensor(3, n, rng);
            DiffusionConfig cfg;
            std::uniform_real_distribution<double> u(0.0, 1.0);
            for (std::size_t f = 0; f < 3; ++f) {
                cfg.alpha[f] = u(rng);
                cfg.iters[f] = static_cast<int>(rng() % 4);
            }
            cfg.beta = u(rng);
            cfg.fuse_each_step = trial % 2 == 1;
            const auto out = apply_diffusion(t, a, cfg);
            for (std::size_t w = 0; w < 3; ++w)
                for (std::size_t f = 0; f < 3; ++f) {
                    std::vector<double> x(n);
                    for (std::size_t i = 0; i < n; ++i) x[i] = t.at(w, i, f);
                    const bool passthrough = cfg.alpha[f] == 0.0 || cfg.iters[f] == 0;
                    const auto ref = passthrough ? x : oracle(dense, x, cfg.alpha[f], cfg.iters[f], cfg.beta,
                                                             cfg.fuse_each_step);
                    for (std::size_t i = 0; i < n; ++i) CHECK(std::fabs(out.at(w, i, f) - ref[i]) <= 1e-12);
                }
        }
    }

    TEST_CASE("No_Diffusion is the exact identity") {
        std::mt19937_64 rng(23);
        const auto a = normalize_sym(test::random_connected_graph(7, rng));
        const auto t = random_tensor(5, 7, rng);
        CHECK(apply_diffusion(t, a, *find_diffusion_preset("No_Diffusion")).values == t.values);
        CHECK(diffuse_feature(std::vector<double>{1, 2, 3, 4, 5, 6, 7}, a, 0.0, 5) ==
              std::vector<double>{1, 2, 3, 4, 5, 6, 7});
    }

    TEST_CASE("each step is non-expansive in the Euclidean norm") {
        std::mt19937_64 rng(25);
        std::uniform_real_distribution<double> u(-1.0, 1.0), al(0.0, 1.0);
        for (int g = 0; g < 100; ++g) {
            const std::size_t n = 2 + rng() % 9;
            const auto a = normalize_sym(test::random_connected_graph(n, rng));
            std::vector<double> x(n);
            for (auto& v : x) v = u(rng);
            const double alpha = al(rng);
            for (int step = 0; step < 5; ++step) {
                const auto y = diffuse_feature(x, a, alpha, 1);
                CHECK(l2(y) <= l2(x) * (1.0 + 1e-12));
                x = y;
            }
        }
    }

    TEST_CASE("on regular graphs each step is also non-expansive in max norm and shrinks the deviation") {
        std::mt19937_64 rng(27);
        std::uniform_real_distribution<double> u(-1.0, 1.0), al(0.0, 1.0);
        for (int g = 0; g < 50; ++g) {
            const std::size_t n = 4 + rng() % 7;
            const std::size_t h = 1 + rng() % ((n - 1) / 2);
            const auto a = normalize_sym(regular_graph(n, h, rng));
            std::vector<double> x(n);
            for (auto& v : x) v = u(rng);
            const double alpha = al(rng);
            auto deviation = [&](const std::vector<double>& v) {
                double m = 0.0, s = 0.0;
                for (double q : v) m += q;
                m /= static_cast<double>(v.size());
                for (double q : v) s += std::fabs(q - m);
                return s;
            };
            for (int step = 0; step < 5; ++step) {
                const auto y = diffuse_feature(x, a, alpha, 1);
                CHECK(max_abs(y) <= max_abs(x) * (1.0 + 1e-12));
                CHECK(deviation(y) <= deviation(x) + 1e-12);
                x = y;
            }
        }
    }

    TEST_CASE("on irregular graphs the max norm can grow while the Euclidean norm cannot") {
        // Star: the hub gathers sqrt(3) times the leaf value.
        SparseMatrix star(4, {{0, 1, 1.0}, {1, 0, 1.0}, {0, 2, 1.0}, {2, 0, 1.0}, {0, 3, 1.0}, {3, 0, 1.0}});
        const auto a = normalize_sym(star);
        const std::vector<double> x{0.0, 1.0, 1.0, 1.0};
        const auto y = diffuse_feature(x, a, 1.0, 1);
        CHECK(y[0] == doctest::Approx(std::sqrt(3.0)));
        CHECK(max_abs(y) > max_abs(x));
        CHECK(l2(y) <= l2(x) * (1.0 + 1e-12));
    }

    TEST_CASE("deviation from the stationary direction shrinks on connected graphs") {
        // The symmetric operator fixes D^1/2 1, so the component orthogonal to it
        // must not grow.
        std::mt19937_64 rng(29);
        std::uniform_real_distribution<double> u(-1.0, 1.0), al(0.0, 1.0);
        for (int g = 0; g < 50; ++g) {
            const std::size_t n = 3 + rng() % 8;
            const auto raw = test::random_connected_graph(n, rng);
            const auto a = normalize_sym(raw);
            auto s = raw.row_sums();
            double norm = 0.0;
            for (auto& v : s) {
                v = std::sqrt(v);
                norm += v * v;
            }
            norm = std::sqrt(norm);
            for (auto& v : s) v /= norm;
            auto residual = [&](const std::vector<double>& v) {
                double p = 0.0;
                for (std::size_t i = 0; i < n; ++i) p += v[i] * s[i];
                std::vector<double> r(n);
                for (std::size_t i = 0; i < n; ++i) r[i] = v[i] - p * s[i];
                return l2(r);
            };
            std::vector<double> x(n);
            for (auto& v : x) v = u(rng);
            const double alpha = al(rng);
            for (int step = 0; step < 5; ++step) {
                const auto y = diffuse_feature(x, a, alpha, 1);
                CHECK(residual(y) <= residual(x) + 1e-12);
                x = y;
            }
        }
    }

    TEST_CASE("permuting weeks commutes with diffusion") {
        std::mt19937_64 rng(31);
        const auto a = normalize_sym(test::random_connected_graph(6, rng));
        const auto t = random_tensor(8, 6, rng);
        const auto cfg = *find_diffusion_preset("Over_Diffusion");
        const auto out = apply_diffusion(t, a, cfg);
        std::vector<std::size_t> perm{3, 1, 7, 0, 5, 2, 6, 4};
        RiskTensor tp = t;
        for (std::size_t w = 0; w < 8; ++w)
            for (std::size_t i = 0; i < 6; ++i)
                for (std::size_t f = 0; f < 3; ++f) tp.at(w, i, f) = t.at(perm[w], i, f);
        const auto outp = apply_diffusion(tp, a, cfg);
        for (std::size_t w = 0; w < 8; ++w)
            for (std::size_t i = 0; i < 6; ++i)
                for (std::size_t f = 0; f < 3; ++f) CHECK(outp.at(w, i, f) == out.at(perm[w], i, f));
    }

    TEST_CASE("features diffuse independently") {
        std::mt19937_64 rng(33);
        const auto a = normalize_sym(test::random_connected_graph(6, rng));
        const auto t = random_tensor(2, 6, rng);
        DiffusionConfig cfg;
        cfg.alpha = {0.3, 0.0, 0.6};
        cfg.iters = {2, 0, 1};
        auto t2 = t;
        for (std::size_t i = 0; i < 6; ++i) t2.at(0, i, 2) += 1.0;
        const auto o1 = apply_diffusion(t, a, cfg), o2 = apply_diffusion(t2, a, cfg);
        for (std::size_t i = 0; i < 6; ++i) {
            CHECK(o1.at(0, i, 0) == o2.at(0, i, 0));
            CHECK(o1.at(0, i, 1) == t.at(0, i, 1));
        }
    }

    TEST_CASE("config validation") {
        DiffusionConfig c;
        c.alpha = {1.2, 0, 0};
        CHECK_THROWS_AS(c.validate(), Error);
        c.alpha = {0, 0, 0};
        c.beta = -0.1;
        CHECK_THROWS_AS(c.validate(), Error);
        c.beta = 0.5;
        c.iters = {0, -1, 0};
        CHECK_THROWS_AS(c.validate(), Error);
        const auto p = *find_diffusion_preset("Differentiated_A");
        const auto back = DiffusionConfig::from_json(p.to_json());
        CHECK(back.alpha == p.alpha);
        CHECK(back.iters == p.iters);
        CHECK(back.name == p.name);
    }

    TEST_CASE("min-max scaling fits on a range and inverts") {
        std::mt19937_64 rng(35);
        const auto t = random_tensor(10, 4, rng);
        const auto s = FeatureScaling::fit(t, 0, 6);
        const auto scaled = s.apply(t);
        for (std::size_t w = 0; w < 6; ++w)
            for (std::size_t i = 0; i < 4; ++i)
                for (std::size_t f = 0; f < 3; ++f) {
                    CHECK(scaled.at(w, i, f) >= 0.0);
                    CHECK(scaled.at(w, i, f) <= 1.0);
                }
        const auto back = s.invert(scaled);
        for (std::size_t k = 0; k < t.values.size(); ++k)
            CHECK(back.values[k] == doctest::Approx(t.values[k]).epsilon(1e-13));
        const auto j = FeatureScaling::from_json(s.to_json());
        CHECK(j.min == s.min);
        CHECK(j.max == s.max);
        CHECK_THROWS_AS(FeatureScaling::fit(t, 4, 4), Error);
    }
}
