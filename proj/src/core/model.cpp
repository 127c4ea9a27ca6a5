// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#include "model.hpp"

#include "error.hpp"

#include <cmath>

namespace roadrisk::nn {

using nlohmann::json;

void ModelConfig::validate() const {
    auto bad = [](const std::string& msg) { fail(ErrorKind::Config, "InvalidModelConfig", msg); };
    if (d == 0 || heads == 0 || d % heads != 0) bad("d must be a positive multiple of heads");
    if (layers < 1 || layers > 2) bad("layers must be 1 or 2");
    if (t_in == 0 || t_out == 0) bad("t_in and t_out must be >= 1");
    if (conv_kernel == 0) bad("conv_kernel must be >= 1");
    if (!encoder_causal && conv_kernel % 2 == 0) bad("a non-causal encoder needs an odd conv_kernel");
    if (!(dropout >= 0.0 && dropout < 1.0)) bad("dropout must lie in [0,1)");
}

json ModelConfig::to_json() const {
    return {{"d", d},
            {"heads", heads},
            {"layers", layers},
            {"t_in", t_in},
            {"t_out", t_out},
            {"conv_kernel", conv_kernel},
            {"dropout", dropout},
            {"spatial_attention", spatial_attention},
            {"encoder_causal", encoder_causal},
            {"zero_init_head", zero_init_head}};
}

ModelConfig ModelConfig::from_json(const json& j) {
    ModelConfig c;
    c.d = j.value("d", c.d);
    c.heads = j.value("heads", c.heads);
    c.layers = j.value("layers", c.layers);
    c.t_in = j.value("t_in", c.t_in);
    c.t_out = j.value("t_out", c.t_out);
    c.conv_kernel = j.value("conv_kernel", c.conv_kernel);
    c.dropout = j.value("dropout", c.dropout);
    c.spatial_attention = j.value("spatial_attention", c.spatial_attention);
    c.encoder_causal = j.value("encoder_causal", c.encoder_causal);
    c.zero_init_head = j.value("zero_init_head", c.zero_init_head);
    c.validate();
    return c;
}

namespace {

Tensor xavier(Shape shape, double fan_in, double fan_out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    Tensor t(std::move(shape), 0.0);
    for (auto& v : t.values()) v = u(rng);
    return t;
}

void add_temporal_params(ParamSet& p, const std::string& prefix, const ModelConfig& c, std::mt19937_64& rng) {
    const double d = static_cast<double>(c.d), k = static_cast<double>(c.conv_kernel);
    for (const char* n : {"q", "k", "v"}) {
        p[prefix + ".conv_" + n + ".w"] = xavier({c.conv_kernel, c.d, c.d}, k * d, k * d, rng);
        p[prefix + ".conv_" + n + ".b"] = Tensor({c.d}, 0.0);
    }
    for (const char* n : {"Wq", "Wk", "Wv", "Wo"}) p[prefix + "." + n] = xavier({c.d, c.d}, d, d, rng);
    p[prefix + ".bo"] = Tensor({c.d}, 0.0);
}

void add_cross_params(ParamSet& p, const std::string& prefix, const ModelConfig& c, std::mt19937_64& rng) {
    const double d = static_cast<double>(c.d);
    for (const char* n : {"Wq", "Wk", "Wv", "Wo"}) p[prefix + "." + n] = xavier({c.d, c.d}, d, d, rng);
    p[prefix + ".bo"] = Tensor({c.d}, 0.0);
}

void add_gcn_params(ParamSet& p, const std::string& prefix, const ModelConfig& c, std::mt19937_64& rng) {
    const double d = static_cast<double>(c.d);
    for (int f = 0; f < 3; ++f) {
        const std::string s = std::to_string(f);
        p[prefix + ".Wq" + s] = xavier({c.d, c.d}, d, d, rng);
        p[prefix + ".Wk" + s] = xavier({c.d, c.d}, d, d, rng);
        p[prefix + ".Theta" + s] = xavier({c.d, c.d}, d, d, rng);
    }
}

void add_norm_params(ParamSet& p, const std::string& prefix, const ModelConfig& c) {
    p[prefix + ".g"] = Tensor({c.d}, 1.0);
    p[prefix + ".b"] = Tensor({c.d}, 0.0);
}

} // namespace

ParamSet init_params(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    ParamSet p;
    const double d = static_cast<double>(cfg.d);
    // Creation order fixes the random stream; the map order is independent.
    p["embed.W"] = xavier({3, cfg.d}, 3.0, d, rng);
    p["embed.b"] = Tensor({cfg.d}, 0.0);
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        const std::string e = "enc" + std::to_string(l);
        add_norm_params(p, e + ".ln1", cfg);
        add_temporal_params(p, e + ".tattn", cfg, rng);
        add_norm_params(p, e + ".ln2", cfg);
        add_gcn_params(p, e + ".gcn", cfg, rng);
    }
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        const std::string e = "dec" + std::to_string(l);
        add_norm_params(p, e + ".ln1", cfg);
        add_temporal_params(p, e + ".sattn", cfg, rng);
        add_norm_params(p, e + ".ln2", cfg);
        add_cross_params(p, e + ".xattn", cfg, rng);
        add_norm_params(p, e + ".ln3", cfg);
        add_gcn_params(p, e + ".gcn", cfg, rng);
    }
    std::normal_distribution<double> token(0.0, 1.0);
    Tensor start({cfg.d}, 0.0);
    for (auto& v : start.values()) v = token(rng);
    p["start"] = std::move(start);
    p["head.W"] = cfg.zero_init_head ? Tensor({cfg.d, 1}, 0.0) : xavier({cfg.d, 1}, d, 1.0, rng);
    p["head.b"] = Tensor({1}, 0.0);
    return p;
}

BoundParams::BoundParams(Tape& tape, const ParamSet& params, bool trainable) : tape_(&tape) {
    for (const auto& [name, t] : params) vars_[name] = trainable ? tape.variable(t) : tape.constant(t);
}

Var BoundParams::operator[](const std::string& name) const {
    auto it = vars_.find(name);
    if (it == vars_.end()) fail(ErrorKind::Data, "MissingParameter", "parameter " + name + " not present");
    return it->second;
}

Tensor positional_encoding(std::size_t t, std::size_t d) {
    Tensor pe({t, d}, 0.0);
    for (std::size_t pos = 0; pos < t; ++pos)
        for (std::size_t i = 0; i < d; ++i) {
            const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(d));
            const double a = static_cast<double>(pos) * rate;
            pe(pos, i) = (i % 2 == 0) ? std::sin(a) : std::cos(a);
        }
    return pe;
}

Tensor causal_mask(std::size_t t) {
    Tensor m({t, t}, 0.0);
    for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = i + 1; j < t; ++j) m(i, j) = kMaskValue;
    return m;
}

Model::Model(ModelConfig cfg, Tensor a_norm) : cfg_(std::move(cfg)), a_norm_(std::move(a_norm)) {
    cfg_.validate();
    if (a_norm_.rank() != 2 || a_norm_.dim(0) != a_norm_.dim(1) || a_norm_.dim(0) == 0)
        fail(ErrorKind::InvalidArgument, "ShapeMismatch", "adjacency must be a non-empty square matrix");
}

Var Model::linear(const BoundParams& p, const std::string& w, const std::string& b, Var x) const {
    const Shape s = x.shape();
    const std::size_t in = s.back();
    Var y = matmul(reshape(x, {shape_size(s) / in, in}), p[w]);
    if (!b.empty()) y = add_bias(y, p[b]);
    Shape out = s;
    out.back() = y.shape()[1];
    return reshape(y, out);
}

Var Model::residual(Var h, Var branch, const ForwardOptions& opt) const {
    if (opt.training && cfg_.dropout > 0.0) {
        if (!opt.rng) fail(ErrorKind::InvalidArgument, "MissingRng", "training with dropout needs an rng");
        branch = dropout(branch, cfg_.dropout, *opt.rng);
    }
    return add(h, branch);
}

Var Model::norm(const BoundParams& p, const std::string& prefix, Var h) const {
    return layer_norm(h, p[prefix + ".g"], p[prefix + ".b"]);
}

Var Model::embed(const BoundParams& p, Var x) const {
    const Shape& s = x.shape();
    if (s.size() != 4 || s[1] != num_nodes() || s[3] != 3)
        fail(ErrorKind::InvalidArgument, "ShapeMismatch", "model input must be [B, N, T, 3], got " + shape_str(s));
    return linear(p, "embed.W", "embed.b", x);
}

namespace {

// [M, T, d] -> [M*h, T, d/h]
Var split_heads(Var x, std::size_t heads) {
    const Shape s = x.shape();
    const std::size_t m = s[0], t = s[1], dk = s[2] / heads;
    return reshape(permute(reshape(x, {m, t, heads, dk}), {0, 2, 1, 3}), {m * heads, t, dk});
}

// [M*h, T, dk] -> [M, T, h*dk]
Var merge_heads(Var x, std::size_t heads) {
    const Shape s = x.shape();
    const std::size_t m = s[0] / heads, t = s[1], dk = s[2];
    return reshape(permute(reshape(x, {m, heads, t, dk}), {0, 2, 1, 3}), {m, t, heads * dk});
}

void record(const ForwardOptions& opt, std::string site, Var weights, const Tensor* mask) {
    if (opt.log) opt.log->push_back({std::move(site), weights.value(), mask ? *mask : Tensor{}});
}

} // namespace

Var Model::temporal_attention(const BoundParams& p, const std::string& prefix, Var h, bool causal,
                              const ForwardOptions& opt) const {
    const Shape s = h.shape();
    const std::size_t b = s[0], n = s[1], t = s[2], d = s[3];
    Var x = reshape(h, {b * n, t, d});
    auto qkv = [&](const char* which) {
        const std::string c = prefix + ".conv_" + which;
        Var conv = conv1d(x, p[c + ".w"], p[c + ".b"], causal);
        const std::string w = prefix + ".W" + which;
        return split_heads(linear(p, w, "", conv), cfg_.heads);
    };
    Var q = qkv("q");
    Var k = qkv("k");
    Var v = qkv("v");
    const double dk = static_cast<double>(d / cfg_.heads);
    Var scores = scale(bmm(q, k, true), 1.0 / std::sqrt(dk));
    Tensor mask;
    if (causal) mask = causal_mask(t);
    Var attn = softmax_rows(scores, causal ? &mask : nullptr);
    record(opt, prefix, attn, causal ? &mask : nullptr);
    Var out = merge_heads(bmm(attn, v), cfg_.heads);
    return reshape(linear(p, prefix + ".Wo", prefix + ".bo", out), s);
}

Var Model::cross_attention(const BoundParams& p, const std::string& prefix, Var h_dec, Var h_enc,
                           const ForwardOptions& opt) const {
    const Shape sd = h_dec.shape(), se = h_enc.shape();
    if (sd.size() != 4 || se.size() != 4 || sd[0] != se[0] || sd[1] != se[1] || sd[3] != se[3])
        fail(ErrorKind::InvalidArgument, "ShapeMismatch", "cross attention operands " + shape_str(sd) + ", " + shape_str(se));
    const std::size_t m = sd[0] * sd[1];
    Var q = split_heads(linear(p, prefix + ".Wq", "", reshape(h_dec, {m, sd[2], sd[3]})), cfg_.heads);
    Var k = split_heads(linear(p, prefix + ".Wk", "", reshape(h_enc, {m, se[2], se[3]})), cfg_.heads);
    Var v = split_heads(linear(p, prefix + ".Wv", "", reshape(h_enc, {m, se[2], se[3]})), cfg_.heads);
    const double dk = static_cast<double>(sd[3] / cfg_.heads);
    Var attn = softmax_rows(scale(bmm(q, k, true), 1.0 / std::sqrt(dk)));
    record(opt, prefix, attn, nullptr);
    Var out = merge_heads(bmm(attn, v), cfg_.heads);
    return reshape(linear(p, prefix + ".Wo", prefix + ".bo", out), sd);
}

Var Model::spatial_attention_gcn(const BoundParams& p, const std::string& prefix, Var h,
                                 const ForwardOptions& opt) const {
    const Shape s = h.shape();
    if (s.size() != 4 || s[1] != num_nodes())
        fail(ErrorKind::InvalidArgument, "ShapeMismatch", "spatial block input " + shape_str(s));
    const std::size_t b = s[0], n = s[1], t = s[2], d = s[3];
    // Time-major so every (batch, week) slice is one N x d graph signal.
    Var hb = reshape(permute(h, {0, 2, 1, 3}), {b * t, n, d});
    Tape& tape = h.tape();
    Var sum_f;
    for (int f = 0; f < 3; ++f) {
        const std::string fs = std::to_string(f);
        Var m;
        if (cfg_.spatial_attention) {
            Var q = linear(p, prefix + ".Wq" + fs, "", hb);
            Var k = linear(p, prefix + ".Wk" + fs, "", hb);
            Var attn = softmax_rows(scale(bmm(q, k, true), 1.0 / std::sqrt(static_cast<double>(d))));
            record(opt, prefix + ".S" + fs, attn, nullptr);
            m = mul_const(attn, a_norm_);
        } else {
            Tensor rep({b * t, n, n}, 0.0);
            for (std::size_t i = 0; i < b * t; ++i)
                std::copy(a_norm_.values().begin(), a_norm_.values().end(), rep.data() + i * n * n);
            m = tape.constant(std::move(rep));
        }
        Var hf = relu(linear(p, prefix + ".Theta" + fs, "", bmm_exact(m, hb)));
        sum_f = f == 0 ? hf : add(sum_f, hf);
    }
    Var mean_f = scale(sum_f, 1.0 / 3.0);
    return permute(reshape(mean_f, {b, t, n, d}), {0, 2, 1, 3});
}

Var Model::encoder_layer(const BoundParams& p, std::size_t layer, Var h, const ForwardOptions& opt) const {
    const std::string e = "enc" + std::to_string(layer);
    Var a = residual(h, temporal_attention(p, e + ".tattn", norm(p, e + ".ln1", h), cfg_.encoder_causal, opt), opt);
    return residual(a, spatial_attention_gcn(p, e + ".gcn", norm(p, e + ".ln2", a), opt), opt);
}

Var Model::decoder_layer(const BoundParams& p, std::size_t layer, Var h_dec, Var h_enc,
                         const ForwardOptions& opt) const {
    const std::string e = "dec" + std::to_string(layer);
    Var s = residual(h_dec, temporal_attention(p, e + ".sattn", norm(p, e + ".ln1", h_dec), true, opt), opt);
    Var c = residual(s, cross_attention(p, e + ".xattn", norm(p, e + ".ln2", s), h_enc, opt), opt);
    return residual(c, spatial_attention_gcn(p, e + ".gcn", norm(p, e + ".ln3", c), opt), opt);
}

Var Model::decoder_input(const BoundParams& p, std::size_t batch) const {
    const std::size_t n = num_nodes(), t = cfg_.t_out, d = cfg_.d;
    Tape& tape = p.tape();
    Var ones = tape.constant(Tensor({batch * n * t, 1}, 1.0));
    Var tokens = matmul(ones, reshape(p["start"], {1, d}));
    return add_const(reshape(tokens, {batch, n, t, d}), positional_encoding(t, d));
}

Var Model::forward_with_decoder_input(const BoundParams& p, Var x, Var dec_in, const ForwardOptions& opt) const {
    const Shape s = x.shape();
    if (s.size() != 4 || s[2] != cfg_.t_in)
        fail(ErrorKind::InvalidArgument, "ShapeMismatch", "model input must span t_in weeks, got " + shape_str(s));
    const Shape expect{s[0], num_nodes(), cfg_.t_out, cfg_.d};
    if (dec_in.shape() != expect)
        fail(ErrorKind::InvalidArgument, "ShapeMismatch", "decoder input " + shape_str(dec_in.shape()));
    Var h = add_const(embed(p, x), positional_encoding(cfg_.t_in, cfg_.d));
    for (std::size_t l = 0; l < cfg_.layers; ++l) h = encoder_layer(p, l, h, opt);
    Var dec = dec_in;
    for (std::size_t l = 0; l < cfg_.layers; ++l) dec = decoder_layer(p, l, dec, h, opt);
    Var y = linear(p, "head.W", "head.b", dec);
    return reshape(y, {s[0], num_nodes(), cfg_.t_out});
}

Var Model::forward(const BoundParams& p, Var x, const ForwardOptions& opt) const {
    return forward_with_decoder_input(p, x, decoder_input(p, x.shape().at(0)), opt);
}

StochasticityCheck check_row_stochastic(const AttentionLog& log) {
    StochasticityCheck out;
    std::vector<double> row;
    for (const auto& rec : log) {
        const auto& w = rec.weights;
        const std::size_t n = w.shape().back();
        const std::size_t rows = w.size() / n;
        const std::size_t msize = rec.mask.empty() ? 0 : rec.mask.size();
        for (std::size_t r = 0; r < rows; ++r) {
            row.clear();
            for (std::size_t j = 0; j < n; ++j) {
                const bool masked = msize && rec.mask[(r * n) % msize + j] <= kMaskValue / 2;
                if (masked) out.max_masked_weight = std::max(out.max_masked_weight, std::fabs(w[r * n + j]));
                else row.push_back(w[r * n + j]);
            }
            if (row.empty()) continue;
            out.max_row_error = std::max(out.max_row_error, std::fabs(exact_sum(row) - 1.0));
            ++out.rows;
        }
    }
    return out;
}

} // namespace roadrisk::nn
