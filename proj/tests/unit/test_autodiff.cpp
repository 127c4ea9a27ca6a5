// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "../grad_cases.hpp"
#include "autodiff.hpp"
#include "error.hpp"
#include "model.hpp"
#include "test_support.hpp"

using namespace roadrisk;
using namespace roadrisk::nn;
using roadrisk::test::random_tensor;

TEST_SUITE("autodiff") {
    TEST_CASE("every op passes the finite-difference check") {
        for (const auto& c : gradcases::run_all(1)) {
            INFO(c.op);
            CHECK(c.result.coordinates > 0);
            CHECK(c.result.max_rel_error < 1e-4);
        }
    }

    TEST_CASE("matmul and bmm match naive loops") {
        std::mt19937_64 rng(2);
        Tape t;
        const auto a = random_tensor({2, 3, 4}, rng), b = random_tensor({2, 4, 5}, rng);
        const auto y = bmm(t.constant(a), t.constant(b)).value();
        const auto ye = bmm_exact(t.constant(a), t.constant(b)).value();
        for (std::size_t s = 0; s < 2; ++s)
            for (std::size_t i = 0; i < 3; ++i)
                for (std::size_t j = 0; j < 5; ++j) {
                    double acc = 0.0;
                    for (std::size_t p = 0; p < 4; ++p) acc += a(s, i, p) * b(s, p, j);
                    CHECK(y(s, i, j) == doctest::Approx(acc).epsilon(1e-14));
                    CHECK(ye(s, i, j) == doctest::Approx(acc).epsilon(1e-14));
                }
        const auto bt = random_tensor({2, 5, 4}, rng);
        const auto yt = bmm(t.constant(a), t.constant(bt), true).value();
        double acc = 0.0;
        for (std::size_t p = 0; p < 4; ++p) acc += a(1, 2, p) * bt(1, 3, p);
        CHECK(yt(1, 2, 3) == doctest::Approx(acc).epsilon(1e-14));
    }

    TEST_CASE("conv1d matches a naive loop and causal mode never looks ahead") {
        std::mt19937_64 rng(3);
        const std::size_t N = 2, T = 6, C = 3, D = 2, K = 3;
        const auto x = random_tensor({N, T, C}, rng), w = random_tensor({K, C, D}, rng), b = random_tensor({D}, rng);
        for (bool causal : {true, false}) {
            Tape t;
            const auto y = conv1d(t.constant(x), t.constant(w), t.constant(b), causal).value();
            const long off = causal ? static_cast<long>(K) - 1 : static_cast<long>(K) / 2;
            for (std::size_t n = 0; n < N; ++n)
                for (std::size_t tt = 0; tt < T; ++tt)
                    for (std::size_t d = 0; d < D; ++d) {
                        double acc = b[d];
                        for (std::size_t k = 0; k < K; ++k) {
                            const long src = static_cast<long>(tt) + static_cast<long>(k) - off;
                            if (src < 0 || src >= static_cast<long>(T)) continue;
                            for (std::size_t c = 0; c < C; ++c)
                                acc += x(n, static_cast<std::size_t>(src), c) * w(k, c, d);
                        }
                        CHECK(y(n, tt, d) == doctest::Approx(acc).epsilon(1e-13));
                    }
        }
        // Perturb input at t* and compare outputs before t*.
        for (std::size_t ts = 0; ts < T; ++ts) {
            auto x2 = x;
            for (std::size_t n = 0; n < N; ++n)
                for (std::size_t c = 0; c < C; ++c) x2(n, ts, c) += 10.0;
            Tape t;
            const auto y1 = conv1d(t.constant(x), t.constant(w), t.constant(b), true).value();
            const auto y2 = conv1d(t.constant(x2), t.constant(w), t.constant(b), true).value();
            for (std::size_t n = 0; n < N; ++n)
                for (std::size_t tt = 0; tt < ts; ++tt)
                    for (std::size_t d = 0; d < D; ++d) CHECK(y1(n, tt, d) == y2(n, tt, d));
        }
    }

    TEST_CASE("softmax rows sum to one under random masks") {
        std::mt19937_64 rng(4);
        std::bernoulli_distribution masked(0.5);
        for (int trial = 0; trial < 50; ++trial) {
            const auto x = random_tensor({3, 5, 7}, rng, -30.0, 30.0);
            Tensor mask({3, 5, 7}, 0.0);
            for (std::size_t r = 0; r < 15; ++r) {
                const std::size_t keep = rng() % 7;
                for (std::size_t j = 0; j < 7; ++j)
                    if (j != keep && masked(rng)) mask[r * 7 + j] = kMaskValue;
            }
            Tape t;
            const auto p = softmax_rows(t.constant(x), &mask).value();
            for (std::size_t r = 0; r < 15; ++r) {
                double s = 0.0;
                for (std::size_t j = 0; j < 7; ++j) {
                    if (mask[r * 7 + j] == kMaskValue) CHECK(p[r * 7 + j] == 0.0);
                    CHECK(p[r * 7 + j] >= 0.0);
                    s += p[r * 7 + j];
                }
                CHECK(std::fabs(s - 1.0) <= 1e-12);
            }
            CHECK(t.all_masked_rows() == 0);
        }
    }

    TEST_CASE("a fully masked row yields zeros and is counted") {
        Tape t;
        Tensor mask({2, 3}, 0.0);
        for (std::size_t j = 0; j < 3; ++j) mask[j] = kMaskValue;
        const auto p = softmax_rows(t.constant(Tensor({2, 3}, 1.0)), &mask).value();
        for (std::size_t j = 0; j < 3; ++j) CHECK(p[j] == 0.0);
        CHECK(p[3] == doctest::Approx(1.0 / 3.0));
        CHECK(t.all_masked_rows() == 1);
    }

    TEST_CASE("softmax is stable for huge logits") {
        Tape t;
        const auto p = softmax_rows(t.constant(Tensor({1, 3}, std::vector<double>{1000.0, 1000.0, -1000.0}))).value();
        CHECK(p[0] == doctest::Approx(0.5));
        CHECK(p[2] == 0.0);
        CHECK(p.all_finite());
    }

    TEST_CASE("layer norm yields zero mean and unit variance rows") {
        std::mt19937_64 rng(5);
        Tape t;
        const auto y = layer_norm(t.constant(random_tensor({4, 8}, rng, -5, 5)), t.constant(Tensor({8}, 1.0)),
                                  t.constant(Tensor({8}, 0.0)), 1e-300)
                           .value();
        for (std::size_t r = 0; r < 4; ++r) {
            double m = 0.0, v = 0.0;
            for (std::size_t j = 0; j < 8; ++j) m += y(r, j);
            m /= 8.0;
            for (std::size_t j = 0; j < 8; ++j) v += (y(r, j) - m) * (y(r, j) - m);
            CHECK(std::fabs(m) < 1e-14);
            CHECK(v / 8.0 == doctest::Approx(1.0).epsilon(1e-12));
        }
    }

    TEST_CASE("gradients accumulate across fan-out") {
        Tape t;
        const auto x = t.variable(Tensor({2}, std::vector<double>{1.5, -2.0}));
        // y = sum(x*x + 3x) -> dy/dx = 2x + 3
        const auto y = sum(add(mul(x, x), scale(x, 3.0)));
        t.backward(y);
        const auto g = t.grad(x);
        CHECK(g[0] == 6.0);
        CHECK(g[1] == -1.0);
    }

    TEST_CASE("constants receive no gradient and unreached nodes read as zero") {
        Tape t;
        const auto c = t.constant(Tensor({2}, 1.0));
        const auto x = t.variable(Tensor({2}, 2.0));
        const auto unused = t.variable(Tensor({2}, 5.0));
        t.backward(sum(mul(c, x)));
        CHECK(t.grad(c) == Tensor({2}, 0.0));
        CHECK(t.grad(unused) == Tensor({2}, 0.0));
        CHECK(t.grad(x) == Tensor({2}, 1.0));
        CHECK_FALSE(t.requires_grad(c));
    }

    TEST_CASE("backward is bitwise deterministic") {
        std::mt19937_64 rng(6);
        const auto a = random_tensor({3, 4, 5}, rng), w = random_tensor({3, 5, 4}, rng);
        auto run = [&] {
            Tape t;
            const auto va = t.variable(a), vw = t.variable(w);
            const auto y = softmax_rows(bmm(va, vw));
            t.backward(sum(mul(y, y)));
            return std::make_pair(t.grad(va), t.grad(vw));
        };
        const auto g1 = run(), g2 = run();
        CHECK(g1.first == g2.first);
        CHECK(g1.second == g2.second);
    }

    TEST_CASE("debug mode catches non-finite values") {
        Tape t;
        t.set_check_finite(true);
        const auto x = t.variable(Tensor({1}, std::numeric_limits<double>::max()));
        try {
            scale(x, 10.0);
            FAIL("expected NonFinite");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Numeric);
        }
    }

    TEST_CASE("shape errors are reported") {
        Tape t;
        const auto a = t.constant(Tensor({2, 3})), b = t.constant(Tensor({3, 2}));
        CHECK_THROWS_AS(add(a, b), Error);
        CHECK_THROWS_AS(matmul(a, a), Error);
        CHECK_THROWS_AS(reshape(a, {4}), Error);
        CHECK_THROWS_AS(t.backward(a), Error);
        Tape other;
        CHECK_THROWS_AS(add(a, other.constant(Tensor({2, 3}))), Error);
    }

    TEST_CASE("exact_sum is correctly rounded and order independent") {
        CHECK(exact_sum(std::vector<double>{1e16, 1.0, -1e16}) == 1.0);
        CHECK(exact_sum(std::vector<double>{}) == 0.0);
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::uniform_int_distribution<int> ex(-30, 30);
        std::vector<double> v(500);
        for (auto& x : v) x = std::ldexp(u(rng), ex(rng));
        const double s = exact_sum(v);
        for (int k = 0; k < 10; ++k) {
            std::shuffle(v.begin(), v.end(), rng);
            CHECK(exact_sum(v) == s);
        }
        long double ref = 0.0L;
        std::sort(v.begin(), v.end(), [](double a, double b) { return std::fabs(a) < std::fabs(b); });
        for (double x : v) ref += x;
        CHECK(s == doctest::Approx(static_cast<double>(ref)).epsilon(1e-15));
    }

    TEST_CASE("dropout keeps expectation and is identity at rate 0") {
        std::mt19937_64 rng(8);
        Tape t;
        const auto x = t.constant(Tensor({20000}, 1.0));
        CHECK(dropout(x, 0.0, rng).id() == x.id());
        const auto y = dropout(x, 0.25, rng).value();
        double m = 0.0;
        for (double v : y.values()) {
            CHECK((v == 0.0 || v == doctest::Approx(1.0 / 0.75)));
            m += v;
        }
        CHECK(m / 20000.0 == doctest::Approx(1.0).epsilon(0.03));
        CHECK_THROWS_AS(dropout(x, 1.0, rng), Error);
    }
}
