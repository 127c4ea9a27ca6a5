// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#include "train_eval.hpp"

#include "error.hpp"
#include "util.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace roadrisk {

using nlohmann::json;
using nn::Tensor;

Split split_temporal(std::size_t weeks, std::size_t t_in, std::size_t t_out, double train_frac, double val_frac) {
    if (!(train_frac > 0.0 && val_frac > 0.0 && train_frac + val_frac < 1.0))
        fail(ErrorKind::Config, "InvalidSplit", "split fractions must be positive and sum below 1");
    const std::size_t span = t_in + t_out;
    if (weeks < span + 3)
        fail(ErrorKind::Data, "InsufficientHistory",
             std::to_string(weeks) + " weeks cannot host a " + std::to_string(span) + "-week window per split");
    const auto a = static_cast<std::size_t>(std::floor(train_frac * static_cast<double>(weeks)));
    const auto b = static_cast<std::size_t>(std::floor((train_frac + val_frac) * static_cast<double>(weeks)));
    Split s{{0, a}, {a, b}, {b, weeks}};
    for (const auto* r : {&s.train, &s.val, &s.test})
        if (r->size() < span)
            fail(ErrorKind::Data, "InsufficientHistory",
                 "split [" + std::to_string(r->begin) + "," + std::to_string(r->end) + ") is shorter than a " +
                     std::to_string(span) + "-week window");
    return s;
}

std::vector<std::size_t> window_starts(const WeekRange& range, std::size_t t_in, std::size_t t_out) {
    std::vector<std::size_t> out;
    for (std::size_t s = range.begin; s + t_in + t_out <= range.end; ++s) out.push_back(s);
    return out;
}

std::string feature_mask_name(const FeatureMask& mask) {
    std::string s;
    const char letters[3] = {'S', 'I', 'E'};
    for (std::size_t f = 0; f < 3; ++f)
        if (mask[f]) s += letters[f];
    return s.empty() ? "none" : s;
}

std::optional<FeatureMask> feature_mask_from_name(std::string_view name) {
    FeatureMask m{false, false, false};
    for (char c : name) {
        const std::size_t f = c == 'S' ? 0 : c == 'I' ? 1 : c == 'E' ? 2 : 3;
        if (f == 3 || m[f]) return std::nullopt;
        m[f] = true;
    }
    if (!m[0] && !m[1] && !m[2]) return std::nullopt;
    return m;
}

Batch make_batch(const ForecastData& data, std::span<const std::size_t> starts, std::size_t t_in, std::size_t t_out) {
    const auto& ten = data.scaled;
    const std::size_t n = ten.num_nodes(), b = starts.size();
    Batch out{Tensor({b, n, t_in, 3}, 0.0), Tensor({b, n, t_out}, 0.0)};
    for (std::size_t k = 0; k < b; ++k) {
        const std::size_t s = starts[k];
        if (s + t_in + t_out > ten.num_weeks())
            fail(ErrorKind::InvalidArgument, "WindowOutOfRange", "window at week " + std::to_string(s));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t t = 0; t < t_in; ++t)
                for (std::size_t f = 0; f < 3; ++f)
                    out.x[((k * n + i) * t_in + t) * 3 + f] = data.features[f] ? ten.at(s + t, i, f) : 0.0;
            for (std::size_t t = 0; t < t_out; ++t)
                out.y[(k * n + i) * t_out + t] = ten.at(s + t_in + t, i, data.target_feature);
        }
    }
    return out;
}

// ---------------------------------------------------------------- config

void TrainConfig::validate() const {
    auto bad = [](const std::string& msg) { fail(ErrorKind::Config, "InvalidTrainConfig", msg); };
    if (epochs_main < 0 || epochs_finetune < 0) bad("epoch counts must be >= 0");
    if (!(lr_main >= 0.0) || !(finetune_lr() >= 0.0)) bad("learning rates must be >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) bad("Adam betas must lie in [0,1)");
    if (!(adam_eps > 0.0)) bad("Adam epsilon must be > 0");
}

json TrainConfig::to_json() const {
    return {{"epochs_main", epochs_main}, {"epochs_finetune", epochs_finetune}, {"lr_main", lr_main},
            {"lr_finetune", finetune_lr()}, {"beta1", beta1},                 {"beta2", beta2},
            {"adam_eps", adam_eps},       {"seed", seed},                       {"batch", batch},
            {"optimizer", "adam"},        {"loss", "l1"}};
}

TrainConfig TrainConfig::from_json(const json& j) {
    TrainConfig c;
    c.epochs_main = j.value("epochs_main", c.epochs_main);
    c.epochs_finetune = j.value("epochs_finetune", c.epochs_finetune);
    c.lr_main = j.value("lr_main", c.lr_main);
    if (j.contains("lr_finetune")) c.lr_finetune = j.at("lr_finetune").get<double>();
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.adam_eps = j.value("adam_eps", c.adam_eps);
    c.seed = j.value("seed", c.seed);
    c.batch = j.value("batch", c.batch);
    c.validate();
    return c;
}

// ---------------------------------------------------------------- Adam

void Adam::step(nn::ParamSet& params, const nn::ParamSet& grads, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (auto& [name, p] : params) {
        auto git = grads.find(name);
        if (git == grads.end()) continue;
        const Tensor& g = git->second;
        auto& m = m_[name];
        auto& v = v_[name];
        if (m.empty()) m = Tensor(p.shape(), 0.0);
        if (v.empty()) v = Tensor(p.shape(), 0.0);
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = b1_ * m[i] + (1.0 - b1_) * g[i];
            v[i] = b2_ * v[i] + (1.0 - b2_) * g[i] * g[i];
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            p[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

// ---------------------------------------------------------------- training

namespace {

constexpr std::size_t kEvalChunk = 16;

} // namespace

Tensor predict_windows(const nn::Model& model, const nn::ParamSet& params, const ForecastData& data,
                       std::span<const std::size_t> starts) {
    const auto& mc = model.config();
    const std::size_t n = model.num_nodes();
    Tensor out({starts.size(), n, mc.t_out}, 0.0);
    for (std::size_t c = 0; c < starts.size(); c += kEvalChunk) {
        const auto chunk = starts.subspan(c, std::min(kEvalChunk, starts.size() - c));
        const Batch b = make_batch(data, chunk, mc.t_in, mc.t_out);
        nn::Tape tape;
        nn::BoundParams p(tape, params, false);
        nn::Var y = model.forward(p, tape.constant(b.x));
        std::copy(y.value().values().begin(), y.value().values().end(), out.data() + c * n * mc.t_out);
    }
    return out;
}

double evaluate_loss(const nn::Model& model, const nn::ParamSet& params, const ForecastData& data,
                     std::span<const std::size_t> starts) {
    if (starts.empty()) fail(ErrorKind::Data, "InsufficientHistory", "no evaluation windows");
    const Tensor pred = predict_windows(model, params, data, starts);
    const Batch b = make_batch(data, starts, model.config().t_in, model.config().t_out);
    std::vector<double> diffs(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) diffs[i] = std::fabs(pred[i] - b.y[i]);
    return nn::exact_sum(diffs) / static_cast<double>(diffs.size());
}

TrainResult train(const nn::Model& model, nn::ParamSet params, const ForecastData& data, const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
    cfg.validate();
    const auto& mc = model.config();
    if (data.scaled.num_nodes() != model.num_nodes())
        fail(ErrorKind::Data, "ShapeMismatch", "data and model disagree on the node count");
    const auto train_w = window_starts(data.split.train, mc.t_in, mc.t_out);
    const auto val_w = window_starts(data.split.val, mc.t_in, mc.t_out);
    if (train_w.empty() || val_w.empty()) fail(ErrorKind::Data, "InsufficientHistory", "a split hosts no window");

    std::mt19937_64 rng(cfg.seed);
    Adam adam(cfg.beta1, cfg.beta2, cfg.adam_eps);
    TrainResult res;
    auto emit = [&](EpochRecord r) {
        res.history.push_back(r);
        if (on_epoch) on_epoch(r);
    };

    res.best_params = params;
    res.best_val_loss = evaluate_loss(model, params, data, val_w);
    res.best_phase = "init";
    emit({"init", 0, std::numeric_limits<double>::quiet_NaN(), res.best_val_loss, true});

    const std::size_t batch = cfg.batch == 0 ? train_w.size() : std::min(cfg.batch, train_w.size());
    std::vector<std::size_t> order = train_w;

    auto run_phase = [&](const char* phase, int epochs, double lr) {
        for (int e = 1; e <= epochs; ++e) {
            std::shuffle(order.begin(), order.end(), rng);
            double loss_sum = 0.0;
            for (std::size_t c = 0, bi = 0; c < order.size(); c += batch, ++bi) {
                const std::span<const std::size_t> chunk(order.data() + c, std::min(batch, order.size() - c));
                const Batch b = make_batch(data, chunk, mc.t_in, mc.t_out);
                nn::Tape tape;
                tape.set_check_finite(cfg.check_finite);
                nn::BoundParams p(tape, params, true);
                nn::ForwardOptions opt;
                opt.training = true;
                opt.rng = &rng;
                nn::Var loss = nn::l1_loss(model.forward(p, tape.constant(b.x), opt), b.y);
                tape.backward(loss);
                nn::ParamSet grads;
                double gnorm2 = 0.0;
                for (const auto& [name, v] : p.vars()) {
                    grads[name] = tape.grad(v);
                    for (double g : grads[name].values()) gnorm2 += g * g;
                }
                const double lv = loss.value()[0];
                if (!std::isfinite(lv) || !std::isfinite(gnorm2)) {
                    std::ostringstream msg;
                    msg << "non-finite loss in " << phase << " epoch " << e << " batch " << bi << " (loss " << lv
                        << ", grad norm " << std::sqrt(gnorm2) << ")";
                    fail(ErrorKind::Numeric, "NonFiniteLoss", msg.str());
                }
                adam.step(params, grads, lr);
                loss_sum += lv * static_cast<double>(chunk.size());
            }
            const double val = evaluate_loss(model, params, data, val_w);
            const bool best = val < res.best_val_loss;
            if (best) {
                res.best_val_loss = val;
                res.best_params = params;
                res.best_phase = phase;
                res.best_epoch = e;
            }
            emit({phase, e, loss_sum / static_cast<double>(order.size()), val, best});
        }
    };

    run_phase("main", cfg.epochs_main, cfg.lr_main);
    params = res.best_params;
    run_phase("finetune", cfg.epochs_finetune, cfg.finetune_lr());
    res.final_params = std::move(params);
    return res;
}

// ---------------------------------------------------------------- metrics

namespace {

void require_same_size(std::span<const double> a, std::span<const double> b, const char* what) {
    if (a.size() != b.size())
        fail(ErrorKind::InvalidArgument, "ShapeMismatch", std::string(what) + ": operands differ in length");
    if (a.empty()) fail(ErrorKind::InvalidArgument, "EmptyInput", std::string(what) + ": no cells");
}

} // namespace

double mae(std::span<const double> y_hat, std::span<const double> y) {
    require_same_size(y_hat, y, "mae");
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += std::fabs(y_hat[i] - y[i]);
    return s / static_cast<double>(y.size());
}

double rmse(std::span<const double> y_hat, std::span<const double> y) {
    require_same_size(y_hat, y, "rmse");
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += (y_hat[i] - y[i]) * (y_hat[i] - y[i]);
    return std::sqrt(s / static_cast<double>(y.size()));
}

MapeResult mape(std::span<const double> y_hat, std::span<const double> y, double eps) {
    require_same_size(y_hat, y, "mape");
    if (!(eps >= 0.0)) fail(ErrorKind::InvalidArgument, "InvalidEps", "mape eps must be >= 0");
    double s = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (std::fabs(y[i]) <= eps) continue;
        s += std::fabs(y_hat[i] - y[i]) / std::fabs(y[i]);
        ++used;
    }
    if (used == 0) fail(ErrorKind::Numeric, "AllMasked", "every target cell is within eps of zero");
    return {100.0 * s / static_cast<double>(used),
            static_cast<double>(y.size() - used) / static_cast<double>(y.size()), used};
}

const HorizonBucket* EvalReport::bucket(std::string_view name) const {
    for (const auto& b : buckets)
        if (b.name == name) return &b;
    return nullptr;
}

json EvalReport::to_json() const {
    json jb = json::array();
    for (const auto& b : buckets)
        jb.push_back({{"name", b.name},
                      {"weeks", {b.first_week, b.last_week}},
                      {"mae", b.mae},
                      {"rmse", b.rmse},
                      {"mape_percent", b.mape}});
    return {{"buckets", jb},
            {"per_week", {{"mae", week_mae}, {"rmse", week_rmse}, {"mape_percent", week_mape},
                          {"mape_masked_fraction", week_masked_fraction}}},
            {"overall", {{"mae", overall_mae}, {"rmse", overall_rmse}, {"mape_percent", overall_mape},
                         {"mape_masked_fraction", masked_fraction}}}};
}

EvalReport horizon_report(const Tensor& y_hat, const Tensor& y, double eps) {
    if (y_hat.shape() != y.shape() || y.rank() != 3)
        fail(ErrorKind::InvalidArgument, "ShapeMismatch", "horizon_report needs matching [B, N, T] operands");
    const std::size_t cells = y.dim(0) * y.dim(1), weeks = y.dim(2);
    EvalReport r;
    std::vector<double> a(cells), b(cells);
    for (std::size_t t = 0; t < weeks; ++t) {
        for (std::size_t c = 0; c < cells; ++c) {
            a[c] = y_hat[c * weeks + t];
            b[c] = y[c * weeks + t];
        }
        r.week_mae.push_back(mae(a, b));
        r.week_rmse.push_back(rmse(a, b));
        try {
            const auto m = mape(a, b, eps);
            r.week_mape.push_back(m.percent);
            r.week_masked_fraction.push_back(m.masked_fraction);
        } catch (const Error& e) {
            if (e.code() != "AllMasked") throw;
            r.week_mape.push_back(std::numeric_limits<double>::quiet_NaN());
            r.week_masked_fraction.push_back(1.0);
        }
    }
    static const std::array<std::tuple<const char*, std::size_t, std::size_t>, 3> spec{
        {{"short", 1, 4}, {"medium", 5, 8}, {"long", 9, 12}}};
    for (const auto& [name, first, last] : spec) {
        if (first > weeks) break;
        HorizonBucket hb{name, first, std::min(last, weeks)};
        double n = 0.0, mape_n = 0.0;
        for (std::size_t w = hb.first_week; w <= hb.last_week; ++w) {
            hb.mae += r.week_mae[w - 1];
            hb.rmse += r.week_rmse[w - 1];
            n += 1.0;
            if (!std::isnan(r.week_mape[w - 1])) {
                hb.mape += r.week_mape[w - 1];
                mape_n += 1.0;
            }
        }
        hb.mae /= n;
        hb.rmse /= n;
        hb.mape = mape_n > 0.0 ? hb.mape / mape_n : std::numeric_limits<double>::quiet_NaN();
        r.buckets.push_back(hb);
    }
    r.overall_mae = mae(y_hat.values(), y.values());
    r.overall_rmse = rmse(y_hat.values(), y.values());
    try {
        const auto m = mape(y_hat.values(), y.values(), eps);
        r.overall_mape = m.percent;
        r.masked_fraction = m.masked_fraction;
    } catch (const Error& e) {
        if (e.code() != "AllMasked") throw;
        r.overall_mape = std::numeric_limits<double>::quiet_NaN();
        r.masked_fraction = 1.0;
    }
    return r;
}

std::vector<double> stability_series(const Tensor& y_hat, const Tensor& y, double eps) {
    return horizon_report(y_hat, y, eps).week_mape;
}

Tensor unscale_target(const Tensor& scaled, const ForecastData& data) {
    Tensor out = scaled;
    for (auto& v : out.values()) v = data.scaling.invert_value(v, data.target_feature);
    return out;
}

// ---------------------------------------------------------------- baselines

Tensor baseline_persistence(const ForecastData& data, std::span<const std::size_t> starts, std::size_t t_in,
                            std::size_t t_out) {
    const auto& ten = data.scaled;
    const std::size_t n = ten.num_nodes();
    Tensor out({starts.size(), n, t_out}, 0.0);
    for (std::size_t k = 0; k < starts.size(); ++k)
        for (std::size_t i = 0; i < n; ++i) {
            const double last = ten.at(starts[k] + t_in - 1, i, data.target_feature);
            for (std::size_t t = 0; t < t_out; ++t) out[(k * n + i) * t_out + t] = last;
        }
    return out;
}

Tensor baseline_historical_mean(const ForecastData& data, std::span<const std::size_t> starts, std::size_t t_out) {
    const auto& ten = data.scaled;
    const std::size_t n = ten.num_nodes();
    const WeekRange tr = data.split.train;
    if (tr.size() == 0) fail(ErrorKind::Data, "InsufficientHistory", "empty training split");
    std::vector<double> mean(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t t = tr.begin; t < tr.end; ++t) mean[i] += ten.at(t, i, data.target_feature);
        mean[i] /= static_cast<double>(tr.size());
    }
    Tensor out({starts.size(), n, t_out}, 0.0);
    for (std::size_t k = 0; k < starts.size(); ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t t = 0; t < t_out; ++t) out[(k * n + i) * t_out + t] = mean[i];
    return out;
}

// ---------------------------------------------------------------- ablation

std::vector<std::string> config_diff(const json& a, const json& b) {
    const json fa = a.flatten(), fb = b.flatten();
    std::vector<std::string> out;
    for (const auto& [k, v] : fa.items())
        if (!fb.contains(k) || fb.at(k) != v) out.push_back(k);
    for (const auto& [k, v] : fb.items())
        if (!fa.contains(k)) out.push_back(k);
    std::sort(out.begin(), out.end());
    // flatten() keys are JSON pointers; report dotted paths.
    for (auto& k : out) {
        if (!k.empty() && k[0] == '/') k.erase(0, 1);
        std::replace(k.begin(), k.end(), '/', '.');
    }
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

json AblationResult::to_json() const {
    json arms_j = json::array();
    for (const auto& a : arms)
        arms_j.push_back({{"name", a.name},
                          {"config", a.config},
                          {"last_window", a.report.to_json()},
                          {"all_windows", a.report_all.to_json()},
                          {"best_val_loss", a.best_val_loss},
                          {"seconds", a.seconds}});
    return {{"arms", arms_j}, {"audit_passed", audit_passed}, {"audit_notes", audit_notes}};
}

std::string AblationResult::to_csv(const std::string& config_hash) const {
    std::ostringstream s;
    s << "# config_hash=" << config_hash << "\n";
    s << "arm,short_mape,medium_mape,long_mape,overall_mae,overall_rmse,overall_mape,masked_fraction,"
         "long_mape_all_windows,best_val_loss\n";
    auto b = [](const EvalReport& r, const char* name) {
        const auto* hb = r.bucket(name);
        return hb ? format_double(hb->mape) : std::string("nan");
    };
    for (const auto& a : arms)
        s << a.name << ',' << b(a.report, "short") << ',' << b(a.report, "medium") << ',' << b(a.report, "long") << ','
          << format_double(a.report.overall_mae) << ',' << format_double(a.report.overall_rmse) << ','
          << format_double(a.report.overall_mape) << ',' << format_double(a.report.masked_fraction) << ','
          << b(a.report_all, "long") << ',' << format_double(a.best_val_loss) << '\n';
    return s.str();
}

AblationResult run_ablation(const json& base, const std::string& factor,
                            const std::vector<std::pair<std::string, json>>& arm_values, const ArmRunner& runner) {
    AblationResult res;
    for (const auto& [name, value] : arm_values) {
        json cfg = base;
        cfg[factor] = value;
        for (const auto& key : config_diff(base, cfg))
            if (key != factor && key.rfind(factor + ".", 0) != 0) {
                res.audit_passed = false;
                res.audit_notes.push_back(name + ": unexpected difference at " + key);
            }
        const auto t0 = std::chrono::steady_clock::now();
        ArmResult arm = runner(cfg);
        arm.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        arm.name = name;
        // The runner must report the config it actually used.
        for (const auto& key : config_diff(cfg, arm.config)) {
            res.audit_passed = false;
            res.audit_notes.push_back(name + ": runner altered " + key);
        }
        res.arms.push_back(std::move(arm));
    }
    return res;
}

AblationResult run_feature_ablation(const json& base, const ArmRunner& runner) {
    std::vector<std::pair<std::string, json>> arms;
    for (const char* n : {"SIE", "SE", "SI", "S"}) arms.emplace_back(n, n);
    return run_ablation(base, "features", arms, runner);
}

AblationResult run_diffusion_ablation(const json& base, const std::vector<DiffusionConfig>& presets,
                                      const ArmRunner& runner) {
    std::vector<std::pair<std::string, json>> arms;
    for (const auto& p : presets) arms.emplace_back(p.name, p.to_json());
    return run_ablation(base, "diffusion", arms, runner);
}

} // namespace roadrisk
