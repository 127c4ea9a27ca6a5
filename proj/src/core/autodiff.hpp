// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tensor.hpp"

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace roadrisk::nn {

class Tape;

// Handle to a node on a Tape. Cheap to copy; only valid while its tape lives.
class Var {
public:
    Var() = default;

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
    Tape& tape() const { return *tape_; }
    std::size_t id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

// Records operations in execution order; backward() replays them in exact
// reverse order, accumulating gradients with += across fan-out. A tape is
// single-threaded; independent tapes may run concurrently.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t self)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    Var variable(Tensor value);

    const Tensor& value(Var v) const { return nodes_[v.id()].value; }
    const Tensor& value(std::size_t id) const { return nodes_[id].value; }
    // Gradient accumulated by backward(); zeros if the node was never reached.
    Tensor grad(Var v) const;
    bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

    // Seeds d(root)/d(root) = 1 for a single-element root.
    void backward(Var root);

    // Debug mode: every op result is checked for NaN/inf.
    void set_check_finite(bool on) { check_finite_ = on; }
    std::size_t size() const { return nodes_.size(); }

    // Softmax rows whose every entry was masked (returned as zeros).
    std::size_t all_masked_rows() const { return all_masked_rows_; }
    void note_all_masked_row() { ++all_masked_rows_; }

    // Op plumbing.
    Var push(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward, const char* op);
    const Tensor& grad_of(std::size_t id) const { return nodes_[id].grad; }
    Tensor& grad_mut(std::size_t id);

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        BackwardFn backward;
    };

    std::vector<Node> nodes_;
    bool check_finite_ = false;
    std::size_t all_masked_rows_ = 0;
};

// Additive mask sentinel for attention scores.
inline constexpr double kMaskValue = -1e9;

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
// Adds a constant tensor whose shape matches the trailing dims of x.
Var add_const(Var x, const Tensor& c);
// Multiplies by a constant tensor whose shape matches the trailing dims of x.
Var mul_const(Var x, const Tensor& c);
// bias has the size of x's last axis.
Var add_bias(Var x, Var bias);

// [M,K] x [K,N] -> [M,N]
Var matmul(Var a, Var b);
// Batched [B,M,K] x [B,K,N] -> [B,M,N]; with transpose_b, b is [B,N,K].
Var bmm(Var a, Var b, bool transpose_b = false);
// As bmm, but every inner sum is correctly rounded and skips exact zeros of
// a, so the result does not depend on the order of the K axis.
Var bmm_exact(Var a, Var b);

Var transpose(Var a);
Var permute(Var a, const std::vector<std::size_t>& perm);
Var reshape(Var a, Shape shape);
// Concatenation along the last axis.
Var concat(std::span<const Var> parts);

Var relu(Var x);
// Softmax along the last axis. `mask` is additive, shaped like x or like its
// trailing two dims; entries at or below kMaskValue / 2 are forced to exactly
// zero. A fully masked row yields zeros and is counted on the tape.
Var softmax_rows(Var x, const Tensor* mask = nullptr);
// Normalises the last axis to zero mean, unit population variance.
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
// Temporal convolution. x [N,T,C], weight [K,C,D], bias [D] -> [N,T,D].
// Causal mode pads on the left so output t sees inputs <= t; otherwise the
// kernel is centred and K must be odd.
Var conv1d(Var x, Var weight, Var bias, bool causal);
Var dropout(Var x, double rate, std::mt19937_64& rng);

Var sum(Var x);
Var mean(Var x);
// mean |pred - target|
Var l1_loss(Var pred, const Tensor& target);

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t coordinates = 0;
};

using ScalarFn = std::function<Var(Tape&, std::span<const Var>)>;

// Central finite differences against tape gradients. Relative error is
// |analytic - numeric| / max(|analytic|, |numeric|, 1e-6). At most
// `max_coords` coordinates per parameter are sampled (seeded).
GradCheckResult grad_check(const ScalarFn& fn, const std::vector<Tensor>& params, double eps = 1e-5,
                           std::size_t max_coords = 48, std::uint64_t seed = 7);

} // namespace roadrisk::nn
