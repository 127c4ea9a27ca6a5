// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "autodiff.hpp"
#include "checkpoint.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace roadrisk::nn {

struct ModelConfig {
    std::size_t d = 64;
    std::size_t heads = 4;
    std::size_t layers = 1;
    std::size_t t_in = 12;
    std::size_t t_out = 12;
    std::size_t conv_kernel = 3;
    double dropout = 0.1;
    bool spatial_attention = true; // false: plain GCN, attention fixed to all-ones
    bool encoder_causal = true;
    bool zero_init_head = true;

    void validate() const;
    nlohmann::json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);
};

ParamSet init_params(const ModelConfig& cfg, std::uint64_t seed);

// Every softmax evaluated in a forward pass, with the mask it used.
struct AttentionRecord {
    std::string site;
    Tensor weights;
    Tensor mask; // empty when unmasked
};
using AttentionLog = std::vector<AttentionRecord>;

struct ForwardOptions {
    bool training = false;        // enables dropout
    std::mt19937_64* rng = nullptr; // required when training with dropout > 0
    AttentionLog* log = nullptr;
};

// Parameters placed on a tape.
class BoundParams {
public:
    BoundParams(Tape& tape, const ParamSet& params, bool trainable);
    // Wraps variables that already live on `tape`.
    BoundParams(Tape& tape, std::map<std::string, Var> vars) : tape_(&tape), vars_(std::move(vars)) {}
    Var operator[](const std::string& name) const;
    const std::map<std::string, Var>& vars() const { return vars_; }
    Tape& tape() const { return *tape_; }

private:
    Tape* tape_;
    std::map<std::string, Var> vars_;
};

// Sinusoidal position encoding [T, d].
Tensor positional_encoding(std::size_t t, std::size_t d);
// Additive causal mask [T, T]: 0 on and below the diagonal, kMaskValue above.
Tensor causal_mask(std::size_t t);

class Model {
public:
    // a_norm is the dense symmetric normalised adjacency [N, N].
    Model(ModelConfig cfg, Tensor a_norm);

    const ModelConfig& config() const { return cfg_; }
    std::size_t num_nodes() const { return a_norm_.dim(0); }
    const Tensor& a_norm() const { return a_norm_; }

    // x [B, N, T_in, 3] -> y [B, N, T_out]
    Var forward(const BoundParams& p, Var x, const ForwardOptions& opt = {}) const;
    // As forward, with the decoder's input sequence [B, N, T_out, d] supplied.
    Var forward_with_decoder_input(const BoundParams& p, Var x, Var dec_in, const ForwardOptions& opt = {}) const;
    // Start token plus position encoding, [B, N, T_out, d].
    Var decoder_input(const BoundParams& p, std::size_t batch) const;

    // Building blocks. H is [B, N, T, d] throughout.
    Var embed(const BoundParams& p, Var x) const;
    Var spatial_attention_gcn(const BoundParams& p, const std::string& prefix, Var h, const ForwardOptions& opt) const;
    Var temporal_attention(const BoundParams& p, const std::string& prefix, Var h, bool causal,
                           const ForwardOptions& opt) const;
    Var cross_attention(const BoundParams& p, const std::string& prefix, Var h_dec, Var h_enc,
                        const ForwardOptions& opt) const;
    Var encoder_layer(const BoundParams& p, std::size_t layer, Var h, const ForwardOptions& opt) const;
    Var decoder_layer(const BoundParams& p, std::size_t layer, Var h_dec, Var h_enc, const ForwardOptions& opt) const;

private:
    Var linear(const BoundParams& p, const std::string& w, const std::string& b, Var x) const;
    Var residual(Var h, Var branch, const ForwardOptions& opt) const;
    Var norm(const BoundParams& p, const std::string& prefix, Var h) const;

    ModelConfig cfg_;
    Tensor a_norm_;
};

// Largest |row sum - 1| over rows with at least one unmasked entry, and
// largest |weight| on masked entries, across a log.
struct StochasticityCheck {
    double max_row_error = 0.0;
    double max_masked_weight = 0.0;
    std::size_t rows = 0;
};
StochasticityCheck check_row_stochastic(const AttentionLog& log);

} // namespace roadrisk::nn
