// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <numbers>
#include <random>

#include "../model_checks.hpp"
#include "error.hpp"
#include "train_eval.hpp"
#include "test_support.hpp"

using namespace roadrisk;
using nn::Tensor;

namespace {

ForecastData make_data(std::size_t weeks, std::size_t nodes, std::size_t t_in, std::size_t t_out,
                       std::mt19937_64& rng, bool periodic = false) {
    std::vector<Date> w;
    for (std::size_t t = 0; t < weeks; ++t) w.push_back(test::ymd(2010, 1, 4) + std::chrono::days{7 * static_cast<long>(t)});
    std::vector<int> ids(nodes);
    for (std::size_t i = 0; i < nodes; ++i) ids[i] = static_cast<int>(i);
    RiskTensor raw(w, ids);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t t = 0; t < weeks; ++t)
        for (std::size_t i = 0; i < nodes; ++i)
            for (std::size_t f = 0; f < 3; ++f)
                raw.at(t, i, f) = periodic ? 0.5 + 0.4 * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 8.0 +
                                                                  static_cast<double>(i + f))
                                           : 3.0 * u(rng);
    ForecastData d;
    d.split = split_temporal(weeks, t_in, t_out);
    d.scaling = FeatureScaling::fit(raw, d.split.train.begin, d.split.train.end);
    d.scaled = d.scaling.apply(raw);
    return d;
}

std::vector<double> random_values(std::size_t n, std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

} // namespace

TEST_SUITE("train_eval") {
    TEST_CASE("temporal split is chronological and floor-based") {
        const auto s = split_temporal(208, 12, 12);
        CHECK(s.train == WeekRange{0, 124});
        CHECK(s.val == WeekRange{124, 166});
        CHECK(s.test == WeekRange{166, 208});
        CHECK_THROWS_AS(split_temporal(208, 12, 12, 0.9, 0.2), Error);
        try {
            split_temporal(60, 12, 12);
            FAIL("expected InsufficientHistory");
        } catch (const Error& e) {
            CHECK(e.code() == "InsufficientHistory");
        }
    }

    TEST_CASE("windows tile a range with stride one") {
        const auto w = window_starts({166, 208}, 12, 12);
        REQUIRE(w.size() == 19);
        CHECK(w.front() == 166);
        CHECK(w.back() == 184);
        CHECK(window_starts({0, 23}, 12, 12).empty());
    }

    TEST_CASE("feature mask names") {
        CHECK(feature_mask_name(kAllFeatures) == "SIE");
        CHECK(feature_mask_name({true, false, true}) == "SE");
        for (const char* n : {"SIE", "SE", "SI", "S", "IE", "E"}) CHECK(feature_mask_name(*feature_mask_from_name(n)) == n);
        CHECK_FALSE(feature_mask_from_name("X").has_value());
        CHECK_FALSE(feature_mask_from_name("").has_value());
    }

    TEST_CASE("batches cut windows and zero masked channels") {
        std::mt19937_64 rng(1);
        auto d = make_data(60, 3, 4, 3, rng);
        d.features = {true, false, true};
        const std::vector<std::size_t> starts{0, 5};
        const auto b = make_batch(d, starts, 4, 3);
        CHECK(b.x.shape() == nn::Shape{2, 3, 4, 3});
        CHECK(b.y.shape() == nn::Shape{2, 3, 3});
        for (std::size_t k = 0; k < 2; ++k)
            for (std::size_t i = 0; i < 3; ++i) {
                for (std::size_t t = 0; t < 4; ++t) {
                    CHECK(b.x[((k * 3 + i) * 4 + t) * 3 + 0] == d.scaled.at(starts[k] + t, i, 0));
                    CHECK(b.x[((k * 3 + i) * 4 + t) * 3 + 1] == 0.0);
                    CHECK(b.x[((k * 3 + i) * 4 + t) * 3 + 2] == d.scaled.at(starts[k] + t, i, 2));
                }
                for (std::size_t t = 0; t < 3; ++t) CHECK(b.y(k, i, t) == d.scaled.at(starts[k] + 4 + t, i, 0));
            }
        const std::vector<std::size_t> bad{58};
        CHECK_THROWS_AS(make_batch(d, bad, 4, 3), Error);
    }

    TEST_CASE("metrics match brute-force loops") {
        std::mt19937_64 rng(2);
        std::uniform_int_distribution<std::size_t> len(1, 200);
        for (int trial = 0; trial < 1000; ++trial) {
            const std::size_t n = len(rng);
            const auto a = random_values(n, rng, -5.0, 5.0), b = random_values(n, rng, 0.1, 5.0);
            long double ae = 0, se = 0, pe = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const long double e = static_cast<long double>(a[i]) - b[i];
                ae += std::fabs(e);
                se += e * e;
                pe += std::fabs(e) / std::fabs(static_cast<long double>(b[i]));
            }
            const double m = mae(a, b), r = rmse(a, b);
            CHECK(m == doctest::Approx(static_cast<double>(ae / n)).epsilon(1e-12));
            CHECK(r == doctest::Approx(static_cast<double>(std::sqrt(se / n))).epsilon(1e-12));
            CHECK(mape(a, b).percent == doctest::Approx(static_cast<double>(100 * pe / n)).epsilon(1e-12));
            CHECK(r >= m);
        }
    }

    TEST_CASE("hand-computed metric values") {
        const std::vector<double> yhat{2, 2}, y{1, 4};
        CHECK(mae(yhat, y) == 1.5);
        CHECK(rmse(yhat, y) == doctest::Approx(std::sqrt(2.5)).epsilon(1e-15));
        CHECK(mape(yhat, y).percent == doctest::Approx(75.0).epsilon(1e-15));
    }

    TEST_CASE("MAPE masks near-zero targets") {
        const std::vector<double> yhat{1, 2, 3, 4}, y{0, 1, 1e-10, 2};
        const auto m = mape(yhat, y, 1e-8);
        CHECK(m.used == 2);
        CHECK(m.masked_fraction == 0.5);
        CHECK(m.percent == doctest::Approx(100.0));
        const std::vector<double> zeros{0, 0};
        try {
            mape(std::span<const double>(yhat).first(2), zeros);
            FAIL("expected AllMasked");
        } catch (const Error& e) {
            CHECK(e.code() == "AllMasked");
            CHECK(e.kind() == ErrorKind::Numeric);
        }
        CHECK_THROWS_AS(mae(yhat, zeros), Error);
        CHECK_THROWS_AS(mape(yhat, y, -1.0), Error);
    }

    TEST_CASE("metrics are invariant to a joint permutation of cells") {
        std::mt19937_64 rng(3);
        auto a = random_values(50, rng, 0, 2), b = random_values(50, rng, 0.5, 2);
        const double m = mae(a, b), r = rmse(a, b), p = mape(a, b).percent;
        std::vector<std::size_t> idx(50);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::shuffle(idx.begin(), idx.end(), rng);
        std::vector<double> ap, bp;
        for (auto i : idx) {
            ap.push_back(a[i]);
            bp.push_back(b[i]);
        }
        CHECK(mae(ap, bp) == doctest::Approx(m).epsilon(1e-14));
        CHECK(rmse(ap, bp) == doctest::Approx(r).epsilon(1e-14));
        CHECK(mape(ap, bp).percent == doctest::Approx(p).epsilon(1e-14));
    }

    TEST_CASE("horizon buckets average their member weeks") {
        std::mt19937_64 rng(4);
        const auto yh = modelchecks::random_t({3, 4, 12}, rng, 0, 2);
        auto y = modelchecks::random_t({3, 4, 12}, rng, 0.5, 2);
        // Week 10 fully masked.
        for (std::size_t b = 0; b < 3; ++b)
            for (std::size_t n = 0; n < 4; ++n) y(b, n, 9) = 0.0;
        const auto r = horizon_report(yh, y);
        REQUIRE(r.buckets.size() == 3);
        CHECK(std::isnan(r.week_mape[9]));
        CHECK(r.week_masked_fraction[9] == 1.0);
        for (const auto& hb : r.buckets) {
            double m = 0, p = 0;
            int pn = 0;
            for (std::size_t w = hb.first_week; w <= hb.last_week; ++w) {
                m += r.week_mae[w - 1];
                if (!std::isnan(r.week_mape[w - 1])) {
                    p += r.week_mape[w - 1];
                    ++pn;
                }
            }
            CHECK(hb.mae == doctest::Approx(m / 4.0).epsilon(1e-14));
            CHECK(hb.mape == doctest::Approx(p / pn).epsilon(1e-14));
        }
        CHECK(r.bucket("long")->first_week == 9);
        CHECK(r.bucket("long")->last_week == 12);
        CHECK(r.bucket("nope") == nullptr);
        // Week-level value from an independent loop.
        double e = 0;
        for (std::size_t b = 0; b < 3; ++b)
            for (std::size_t n = 0; n < 4; ++n) e += std::fabs(yh(b, n, 2) - y(b, n, 2));
        CHECK(r.week_mae[2] == doctest::Approx(e / 12.0).epsilon(1e-14));
    }

    TEST_CASE("baselines") {
        std::mt19937_64 rng(5);
        const auto d = make_data(60, 3, 4, 3, rng);
        const std::vector<std::size_t> starts{40, 45};
        const auto p = baseline_persistence(d, starts, 4, 3);
        const auto h = baseline_historical_mean(d, starts, 3);
        for (std::size_t k = 0; k < 2; ++k)
            for (std::size_t i = 0; i < 3; ++i) {
                double m = 0;
                for (std::size_t t = d.split.train.begin; t < d.split.train.end; ++t) m += d.scaled.at(t, i, 0);
                m /= static_cast<double>(d.split.train.size());
                for (std::size_t t = 0; t < 3; ++t) {
                    CHECK(p(k, i, t) == d.scaled.at(starts[k] + 3, i, 0));
                    CHECK(h(k, i, t) == doctest::Approx(m).epsilon(1e-14));
                }
            }
    }

    TEST_CASE("unscaling inverts min-max scaling of the target") {
        std::mt19937_64 rng(6);
        const auto d = make_data(60, 3, 4, 3, rng);
        Tensor s({1, 1, 2}, std::vector<double>{0.0, 1.0});
        const auto u = unscale_target(s, d);
        CHECK(u[0] == doctest::Approx(d.scaling.min[0]));
        CHECK(u[1] == doctest::Approx(d.scaling.max[0]));
    }

    TEST_CASE("first Adam step moves each coordinate by about lr against its gradient sign") {
        nn::ParamSet p{{"w", Tensor({3}, std::vector<double>{1.0, -2.0, 0.5})}};
        const nn::ParamSet g{{"w", Tensor({3}, std::vector<double>{0.3, -4.0, 0.0})}};
        Adam adam;
        adam.step(p, g, 0.01);
        CHECK(p["w"][0] == doctest::Approx(1.0 - 0.01 * 0.3 / (0.3 + 1e-8)).epsilon(1e-12));
        CHECK(p["w"][1] == doctest::Approx(-2.0 + 0.01 * 4.0 / (4.0 + 1e-8)).epsilon(1e-12));
        CHECK(p["w"][2] == 0.5);
        CHECK(adam.steps() == 1);
    }

    TEST_CASE("training with zero learning rate leaves parameters bitwise unchanged") {
        std::mt19937_64 rng(7);
        const auto d = make_data(40, 3, 4, 3, rng);
        const auto cfg = modelchecks::tiny_config(8, 2, 4, 3);
        const nn::Model m(cfg, modelchecks::random_a_norm(3, rng));
        const auto params = nn::init_params(cfg, 1);
        TrainConfig tc;
        tc.epochs_main = 2;
        tc.epochs_finetune = 1;
        tc.lr_main = 0.0;
        const auto r = train(m, params, d, tc);
        CHECK(r.final_params == params);
        CHECK(r.best_params == params);
        CHECK(r.best_phase == "init");
    }

    TEST_CASE("training keeps the best validation checkpoint") {
        std::mt19937_64 rng(8);
        const auto d = make_data(48, 3, 4, 3, rng, true);
        auto cfg = modelchecks::tiny_config(8, 2, 4, 3);
        cfg.zero_init_head = true;
        const nn::Model m(cfg, modelchecks::random_a_norm(3, rng));
        TrainConfig tc;
        tc.epochs_main = 6;
        tc.epochs_finetune = 2;
        tc.lr_main = 1e-2;
        tc.batch = 4;
        std::vector<EpochRecord> seen;
        const auto r = train(m, nn::init_params(cfg, 2), d, tc, [&](const EpochRecord& e) { seen.push_back(e); });
        REQUIRE(seen.size() == 9);
        CHECK(seen.front().phase == "init");
        double min_val = seen.front().val_loss;
        for (const auto& e : seen) min_val = std::min(min_val, e.val_loss);
        CHECK(r.best_val_loss == min_val);
        CHECK(r.best_val_loss < seen.front().val_loss);
        const auto val_w = window_starts(d.split.val, 4, 3);
        CHECK(evaluate_loss(m, r.best_params, d, val_w) == r.best_val_loss);
        // Same seed, same run.
        const auto r2 = train(m, nn::init_params(cfg, 2), d, tc);
        CHECK(r2.final_params == r.final_params);
    }

    TEST_CASE("config diff reports dotted paths") {
        const nlohmann::json a{{"model", {{"d", 16}, {"heads", 2}}}, {"features", "SIE"}};
        auto b = a;
        b["model"]["d"] = 32;
        b["extra"] = 1;
        CHECK(config_diff(a, b) == std::vector<std::string>{"extra", "model.d"});
        CHECK(config_diff(a, a).empty());
    }

    TEST_CASE("ablation audit accepts single-factor arms and flags anything else") {
        const nlohmann::json base{{"features", "SIE"}, {"model", {{"d", 16}}}};
        auto honest = [](const nlohmann::json& c) {
            ArmResult a;
            a.config = c;
            return a;
        };
        const auto ok = run_feature_ablation(base, honest);
        CHECK(ok.audit_passed);
        REQUIRE(ok.arms.size() == 4);
        CHECK(ok.arms[0].name == "SIE");
        CHECK(ok.arms[3].name == "S");
        CHECK(ok.arms[3].config["features"] == "S");

        auto sneaky = [](const nlohmann::json& c) {
            ArmResult a;
            a.config = c;
            a.config["model"]["d"] = 64;
            return a;
        };
        const auto bad = run_feature_ablation(base, sneaky);
        CHECK_FALSE(bad.audit_passed);
        CHECK(bad.audit_notes.size() == 4);
        const auto j = bad.to_json();
        CHECK(j["audit_passed"] == false);
    }
}
