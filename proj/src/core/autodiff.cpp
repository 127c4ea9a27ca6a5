// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#include "autodiff.hpp"

#include "error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace roadrisk::nn {

// ---------------------------------------------------------------- Tensor

std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
    std::ostringstream s;
    s << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) s << (i ? "," : "") << shape[i];
    s << ']';
    return s.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_size(shape_))
        fail(ErrorKind::InvalidArgument, "ShapeMismatch",
             "data length " + std::to_string(data_.size()) + " for shape " + shape_str(shape_));
}

Tensor Tensor::reshaped(Shape shape) const {
    if (shape_size(shape) != data_.size())
        fail(ErrorKind::InvalidArgument, "ShapeMismatch", "cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
    return Tensor(std::move(shape), data_);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double exact_sum(std::span<const double> terms) {
    // Shewchuk's non-overlapping partials with a correctly rounded final step.
    double partials_buf[64];
    std::vector<double> partials_heap;
    double* partials = partials_buf;
    std::size_t cap = 64, n = 0;
    for (double x : terms) {
        std::size_t i = 0;
        for (std::size_t j = 0; j < n; ++j) {
            double y = partials[j];
            if (std::fabs(x) < std::fabs(y)) std::swap(x, y);
            const double hi = x + y;
            const double lo = y - (hi - x);
            if (lo != 0.0) partials[i++] = lo;
            x = hi;
        }
        if (i == cap) {
            if (partials == partials_buf) partials_heap.assign(partials, partials + n);
            partials_heap.resize(cap * 2);
            cap *= 2;
            partials = partials_heap.data();
        }
        partials[i] = x;
        n = i + 1;
    }
    if (n == 0) return 0.0;
    double hi = partials[--n];
    double lo = 0.0;
    while (n > 0) {
        const double x = hi;
        const double y = partials[--n];
        hi = x + y;
        const double yr = hi - x;
        lo = y - yr;
        if (lo != 0.0) break;
    }
    if (n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0))) {
        const double y = lo * 2.0;
        const double x = hi + y;
        if (y == x - hi) hi = x;
    }
    return hi;
}

// ---------------------------------------------------------------- Tape

const Tensor& Var::value() const { return tape_->value(*this); }

Var Tape::constant(Tensor value) {
    nodes_.push_back({std::move(value), Tensor{}, false, nullptr});
    return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Tensor value) {
    nodes_.push_back({std::move(value), Tensor{}, true, nullptr});
    return Var(this, nodes_.size() - 1);
}

Var Tape::push(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward, const char* op) {
    if (check_finite_ && !value.all_finite())
        fail(ErrorKind::Numeric, "NonFinite", std::string("non-finite output from ") + op);
    bool rg = false;
    for (const auto& v : inputs) {
        if (v.tape_ != this) fail(ErrorKind::InvalidArgument, "ForeignVar", std::string(op) + ": operand from another tape");
        rg = rg || nodes_[v.id_].requires_grad;
    }
    nodes_.push_back({std::move(value), Tensor{}, rg, rg ? std::move(backward) : nullptr});
    return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad_mut(std::size_t id) {
    auto& n = nodes_[id];
    if (n.grad.empty() && !n.value.empty()) n.grad = Tensor(n.value.shape(), 0.0);
    return n.grad;
}

Tensor Tape::grad(Var v) const {
    const auto& n = nodes_[v.id()];
    return n.grad.empty() ? Tensor(n.value.shape(), 0.0) : n.grad;
}

void Tape::backward(Var root) {
    if (value(root).size() != 1) fail(ErrorKind::InvalidArgument, "NonScalarRoot", "backward needs a scalar root");
    if (!nodes_[root.id()].requires_grad) return;
    grad_mut(root.id())[0] += 1.0;
    for (std::size_t id = root.id() + 1; id-- > 0;) {
        auto& n = nodes_[id];
        if (!n.requires_grad || !n.backward || n.grad.empty()) continue;
        n.backward(*this, id);
    }
}

// ---------------------------------------------------------------- helpers

namespace {

void require(bool ok, const char* op, const std::string& detail) {
    if (!ok) fail(ErrorKind::InvalidArgument, "ShapeMismatch", std::string(op) + ": " + detail);
}

void require_same(const Var& a, const Var& b, const char* op) {
    require(a.shape() == b.shape(), op, shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

// Does c's shape equal the trailing dims of x's shape?
bool is_trailing(const Shape& x, const Shape& c) {
    if (c.size() > x.size()) return false;
    return std::equal(c.begin(), c.end(), x.end() - static_cast<std::ptrdiff_t>(c.size()));
}

// C[M,N] += A[M,K] B[K,N]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        const double* arow = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[M,N] += A[M,K] B[N,K]^T
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = b + j * k;
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            c[i * n + j] += acc;
        }
    }
}

// C[K,N] += A[M,K]^T B[M,N]
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        const double* brow = b + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            double* crow = c + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

} // namespace

// ---------------------------------------------------------------- elementwise

Var add(Var a, Var b) {
    require_same(a, b, "add");
    Tensor out = a.value();
    const auto& bv = b.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
    const auto ia = a.id(), ib = b.id();
    return a.tape().push(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        for (auto id : {ia, ib}) {
            if (!t.requires_grad(id)) continue;
            auto& ga = t.grad_mut(id);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
    }, "add");
}

Var sub(Var a, Var b) {
    require_same(a, b, "sub");
    Tensor out = a.value();
    const auto& bv = b.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
    const auto ia = a.id(), ib = b.id();
    return a.tape().push(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        if (t.requires_grad(ia)) {
            auto& ga = t.grad_mut(ia);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (t.requires_grad(ib)) {
            auto& gb = t.grad_mut(ib);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        }
    }, "sub");
}

Var mul(Var a, Var b) {
    require_same(a, b, "mul");
    Tensor out = a.value();
    const auto& bv = b.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
    const auto ia = a.id(), ib = b.id();
    return a.tape().push(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        if (t.requires_grad(ia)) {
            auto& ga = t.grad_mut(ia);
            const auto& bv = t.value(ib);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
        }
        if (t.requires_grad(ib)) {
            auto& gb = t.grad_mut(ib);
            const auto& av = t.value(ia);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
        }
    }, "mul");
}

Var scale(Var a, double c) {
    Tensor out = a.value();
    for (auto& v : out.values()) v *= c;
    const auto ia = a.id();
    return a.tape().push(std::move(out), {a}, [ia, c](Tape& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        auto& ga = t.grad_mut(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
    }, "scale");
}

Var add_const(Var x, const Tensor& c) {
    require(is_trailing(x.shape(), c.shape()), "add_const", shape_str(x.shape()) + " vs " + shape_str(c.shape()));
    Tensor out = x.value();
    const std::size_t m = c.size();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += c[i % m];
    const auto ix = x.id();
    return x.tape().push(std::move(out), {x}, [ix](Tape& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        auto& gx = t.grad_mut(ix);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }, "add_const");
}

Var mul_const(Var x, const Tensor& c) {
    require(is_trailing(x.shape(), c.shape()), "mul_const", shape_str(x.shape()) + " vs " + shape_str(c.shape()));
    Tensor out = x.value();
    const std::size_t m = c.size();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= c[i % m];
    const auto ix = x.id();
    return x.tape().push(std::move(out), {x}, [ix, c](Tape& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        auto& gx = t.grad_mut(ix);
        const std::size_t m = c.size();
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * c[i % m];
    }, "mul_const");
}

Var add_bias(Var x, Var bias) {
    require(bias.value().rank() == 1 && x.value().rank() >= 1 && x.shape().back() == bias.shape()[0], "add_bias",
            shape_str(x.shape()) + " + " + shape_str(bias.shape()));
    Tensor out = x.value();
    const auto& b = bias.value();
    const std::size_t c = b.size();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i % c];
    const auto ix = x.id(), ib = bias.id();
    return x.tape().push(std::move(out), {x, bias}, [ix, ib, c](Tape& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        if (t.requires_grad(ix)) {
            auto& gx = t.grad_mut(ix);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
        }
        if (t.requires_grad(ib)) {
            auto& gb = t.grad_mut(ib);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i % c] += g[i];
        }
    }, "add_bias");
}

Var relu(Var x) {
    Tensor out = x.value();
    for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
    const auto ix = x.id();
    return x.tape().push(std::move(out), {x}, [ix](Tape& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        const auto& xv = t.value(ix);
        auto& gx = t.grad_mut(ix);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (xv[i] > 0.0) gx[i] += g[i];
    }, "relu");
}

// ---------------------------------------------------------------- products

Var matmul(Var a, Var b) {
    const auto& A = a.value();
    const auto& B = b.value();
    require(A.rank() == 2 && B.rank() == 2 && A.dim(1) == B.dim(0), "matmul",
            shape_str(A.shape()) + " x " + shape_str(B.shape()));
    const std::size_t m = A.dim(0), k = A.dim(1), n = B.dim(1);
    Tensor out({m, n}, 0.0);
    gemm_nn(A.data(), B.data(), out.data(), m, k, n);
    const auto ia = a.id(), ib = b.id();
    return a.tape().push(std::move(out), {a, b}, [ia, ib, m, k, n](Tape& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        if (t.requires_grad(ia)) gemm_nt(g.data(), t.value(ib).data(), t.grad_mut(ia).data(), m, n, k);
        if (t.requires_grad(ib)) gemm_tn(t.value(ia).data(), g.data(), t.grad_mut(ib).data(), m, k, n);
    }, "matmul");
}

Var bmm(Var a, Var b, bool transpose_b) {
    const auto& A = a.value();
    const auto& B = b.value();
    require(A.rank() == 3 && B.rank() == 3 && A.dim(0) == B.dim(0), "bmm",
            shape_str(A.shape()) + " x " + shape_str(B.shape()));
    const std::size_t batch = A.dim(0), m = A.dim(1), k = A.dim(2);
    const std::size_t n = transpose_b ? B.dim(1) : B.dim(2);
    require((transpose_b ? B.dim(2) : B.dim(1)) == k, "bmm", "inner dimensions differ");
    Tensor out({batch, m, n}, 0.0);
    for (std::size_t s = 0; s < batch; ++s) {
        const double* ap = A.data() + s * m * k;
        const double* bp = B.data() + s * k * n;
        double* cp = out.data() + s * m * n;
        if (transpose_b) gemm_nt(ap, bp, cp, m, k, n);
        else gemm_nn(ap, bp, cp, m, k, n);
    }
    const auto ia = a.id(), ib = b.id();
    return a.tape().push(std::move(out), {a, b}, [ia, ib, batch, m, k, n, transpose_b](Tape& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        const auto& A = t.value(ia);
        const auto& B = t.value(ib);
        const bool ga_on = t.requires_grad(ia), gb_on = t.requires_grad(ib);
        double* ga = ga_on ? t.grad_mut(ia).data() : nullptr;
        double* gb = gb_on ? t.grad_mut(ib).data() : nullptr;
        for (std::size_t s = 0; s < batch; ++s) {
            const double* gp = g.data() + s * m * n;
            const double* ap = A.data() + s * m * k;
            const double* bp = B.data() + s * k * n;
            if (!transpose_b) {
                if (ga_on) gemm_nt(gp, bp, ga + s * m * k, m, n, k);     // dA = G B^T
                if (gb_on) gemm_tn(ap, gp, gb + s * k * n, m, k, n);     // dB = A^T G
            } else {
                if (ga_on) gemm_nn(gp, bp, ga + s * m * k, m, n, k);     // dA = G B
                if (gb_on) gemm_tn(gp, ap, gb + s * n * k, m, n, k);     // dB = G^T A
            }
        }
    }, "bmm");
}

Var bmm_exact(Var a, Var b) {
    const auto& A = a.value();
    const auto& B = b.value();
    require(A.rank() == 3 && B.rank() == 3 && A.dim(0) == B.dim(0) && A.dim(2) == B.dim(1), "bmm_exact",
            shape_str(A.shape()) + " x " + shape_str(B.shape()));
    const std::size_t batch = A.dim(0), m = A.dim(1), k = A.dim(2), n = B.dim(2);
    Tensor out({batch, m, n}, 0.0);
    std::vector<std::size_t> nz;
    std::vector<double> terms;
    nz.reserve(k);
    terms.reserve(k);
    for (std::size_t s = 0; s < batch; ++s) {
        const double* ap = A.data() + s * m * k;
        const double* bp = B.data() + s * k * n;
        double* cp = out.data() + s * m * n;
        for (std::size_t i = 0; i < m; ++i) {
            nz.clear();
            for (std::size_t p = 0; p < k; ++p)
                if (ap[i * k + p] != 0.0) nz.push_back(p);
            for (std::size_t j = 0; j < n; ++j) {
                terms.clear();
                for (auto p : nz) terms.push_back(ap[i * k + p] * bp[p * n + j]);
                cp[i * n + j] = exact_sum(terms);
            }
        }
    }
    const auto ia = a.id(), ib = b.id();
    return a.tape().push(std::move(out), {a, b}, [ia, ib, batch, m, k, n](Tape& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        const auto& A = t.value(ia);
        const auto& B = t.value(ib);
        const bool ga_on = t.requires_grad(ia), gb_on = t.requires_grad(ib);
        double* ga = ga_on ? t.grad_mut(ia).data() : nullptr;
        double* gb = gb_on ? t.grad_mut(ib).data() : nullptr;
        for (std::size_t s = 0; s < batch; ++s) {
            const double* gp = g.data() + s * m * n;
            if (ga_on) gemm_nt(gp, B.data() + s * k * n, ga + s * m * k, m, n, k);
            if (gb_on) gemm_tn(A.data() + s * m * k, gp, gb + s * k * n, m, k, n);
        }
    }, "bmm_exact");
}

// ---------------------------------------------------------------- layout

Var transpose(Var a) {
    require(a.value().rank() == 2, "transpose", "rank-2 operand required");
    return permute(a, {1, 0});
}

Var permute(Var a, const std::vector<std::size_t>& perm) {
    const auto& A = a.value();
    const std::size_t r = A.rank();
    require(perm.size() == r, "permute", "permutation rank differs from tensor rank");
    std::vector<bool> seen(r, false);
    for (auto p : perm) {
        require(p < r && !seen[p], "permute", "invalid permutation");
        seen[p] = true;
    }
    Shape out_shape(r);
    for (std::size_t i = 0; i < r; ++i) out_shape[i] = A.dim(perm[i]);
    std::vector<std::size_t> in_stride(r, 1);
    for (std::size_t i = r; i-- > 1;) in_stride[i - 1] = in_stride[i] * A.dim(i);
    // src_index[o] = flat input index of flat output element o.
    std::vector<std::size_t> src(A.size());
    std::vector<std::size_t> idx(r, 0);
    for (std::size_t o = 0; o < src.size(); ++o) {
        std::size_t in = 0;
        for (std::size_t i = 0; i < r; ++i) in += idx[i] * in_stride[perm[i]];
        src[o] = in;
        for (std::size_t i = r; i-- > 0;) {
            if (++idx[i] < out_shape[i]) break;
            idx[i] = 0;
        }
    }
    Tensor out(out_shape, 0.0);
    for (std::size_t o = 0; o < src.size(); ++o) out[o] = A[src[o]];
    const auto ia = a.id();
    return a.tape().push(std::move(out), {a}, [ia, src = std::move(src)](Tape& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        auto& ga = t.grad_mut(ia);
        for (std::size_t o = 0; o < src.size(); ++o) ga[src[o]] += g[o];
    }, "permute");
}

Var reshape(Var a, Shape shape) {
    Tensor out = a.value().reshaped(std::move(shape));
    const auto ia = a.id();
    return a.tape().push(std::move(out), {a}, [ia](Tape& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        auto& ga = t.grad_mut(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }, "reshape");
}

Var concat(std::span<const Var> parts) {
    require(!parts.empty(), "concat", "no operands");
    const Shape& first = parts[0].shape();
    require(!first.empty(), "concat", "scalar operand");
    const std::size_t rows = shape_size(first) / first.back();
    std::vector<std::size_t> widths;
    std::size_t total = 0;
    for (const auto& p : parts) {
        const Shape& s = p.shape();
        require(s.size() == first.size() && std::equal(s.begin(), s.end() - 1, first.begin()), "concat",
                shape_str(s) + " vs " + shape_str(first));
        widths.push_back(s.back());
        total += s.back();
    }
    Shape out_shape = first;
    out_shape.back() = total;
    Tensor out(out_shape, 0.0);
    std::size_t off = 0;
    for (std::size_t q = 0; q < parts.size(); ++q) {
        const auto& v = parts[q].value();
        for (std::size_t r = 0; r < rows; ++r)
            std::copy_n(v.data() + r * widths[q], widths[q], out.data() + r * total + off);
        off += widths[q];
    }
    std::vector<std::size_t> ids;
    for (const auto& p : parts) ids.push_back(p.id());
    Tape& tape = parts[0].tape();
    for (const auto& p : parts)
        if (&p.tape() != &tape) fail(ErrorKind::InvalidArgument, "ForeignVar", "concat: operand from another tape");
    auto backward = [ids, widths, rows, total](Tape& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        std::size_t off = 0;
        for (std::size_t q = 0; q < ids.size(); ++q) {
            if (t.requires_grad(ids[q])) {
                auto& gq = t.grad_mut(ids[q]);
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < widths[q]; ++c) gq[r * widths[q] + c] += g[r * total + off + c];
            }
            off += widths[q];
        }
    };
    // push() marks the result as requiring grad if its listed input does; the
    // closure itself covers every operand.
    for (const auto& p : parts)
        if (tape.requires_grad(p.id())) return tape.push(std::move(out), {p}, backward, "concat");
    return tape.push(std::move(out), {}, nullptr, "concat");
}

// ---------------------------------------------------------------- nonlinear

Var softmax_rows(Var x, const Tensor* mask) {
    const auto& X = x.value();
    require(X.rank() >= 1, "softmax_rows", "scalar operand");
    const std::size_t n = X.shape().back();
    const std::size_t rows = X.size() / std::max<std::size_t>(n, 1);
    if (mask) {
        const bool full = mask->shape() == X.shape();
        const bool trailing = mask->rank() == 2 && is_trailing(X.shape(), mask->shape());
        require(full || trailing, "softmax_rows", "mask " + shape_str(mask->shape()) + " vs " + shape_str(X.shape()));
    }
    const std::size_t mask_size = mask ? mask->size() : 1;
    Tensor out(X.shape(), 0.0);
    std::vector<double> e(n);
    Tape& tape = x.tape();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = X.data() + r * n;
        double* pr = out.data() + r * n;
        const std::size_t moff = (r * n) % mask_size;
        double mx = -std::numeric_limits<double>::infinity();
        bool any = false;
        for (std::size_t j = 0; j < n; ++j) {
            const double mv = mask ? (*mask)[moff + j] : 0.0;
            if (mv <= kMaskValue / 2) continue;
            mx = std::max(mx, xr[j] + mv);
            any = true;
        }
        if (!any) {
            tape.note_all_masked_row();
            continue;
        }
        std::size_t cnt = 0;
        for (std::size_t j = 0; j < n; ++j) {
            const double mv = mask ? (*mask)[moff + j] : 0.0;
            if (mv <= kMaskValue / 2) {
                pr[j] = 0.0;
                continue;
            }
            pr[j] = std::exp(xr[j] + mv - mx);
            e[cnt++] = pr[j];
        }
        const double z = exact_sum(std::span<const double>(e.data(), cnt));
        for (std::size_t j = 0; j < n; ++j) pr[j] /= z;
    }
    const auto ix = x.id();
    return tape.push(std::move(out), {x}, [ix, n, rows](Tape& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        const auto& p = t.value(self);
        auto& gx = t.grad_mut(ix);
        for (std::size_t r = 0; r < rows; ++r) {
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) dot += g[r * n + j] * p[r * n + j];
            for (std::size_t j = 0; j < n; ++j) gx[r * n + j] += p[r * n + j] * (g[r * n + j] - dot);
        }
    }, "softmax_rows");
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
    const auto& X = x.value();
    require(X.rank() >= 1, "layer_norm", "scalar operand");
    const std::size_t c = X.shape().back();
    require(gain.value().rank() == 1 && gain.shape()[0] == c && bias.value().rank() == 1 && bias.shape()[0] == c,
            "layer_norm", "gain/bias must match the last axis");
    if (!(eps > 0.0)) fail(ErrorKind::InvalidArgument, "InvalidEps", "layer_norm eps must be > 0");
    const std::size_t rows = X.size() / c;
    Tensor out(X.shape(), 0.0);
    Tensor xhat(X.shape(), 0.0);
    std::vector<double> inv_std(rows);
    const auto& G = gain.value();
    const auto& B = bias.value();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = X.data() + r * c;
        double mu = 0.0;
        for (std::size_t j = 0; j < c; ++j) mu += xr[j];
        mu /= static_cast<double>(c);
        double var = 0.0;
        for (std::size_t j = 0; j < c; ++j) var += (xr[j] - mu) * (xr[j] - mu);
        var /= static_cast<double>(c);
        inv_std[r] = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < c; ++j) {
            xhat[r * c + j] = (xr[j] - mu) * inv_std[r];
            out[r * c + j] = G[j] * xhat[r * c + j] + B[j];
        }
    }
    const auto ix = x.id(), ig = gain.id(), ib = bias.id();
    return x.tape().push(std::move(out), {x, gain, bias},
                         [ix, ig, ib, c, rows, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& t,
                                                                                                    std::size_t self) {
        const auto& g = t.grad_of(self);
        const auto& G = t.value(ig);
        if (t.requires_grad(ig)) {
            auto& gg = t.grad_mut(ig);
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t j = 0; j < c; ++j) gg[j] += g[r * c + j] * xhat[r * c + j];
        }
        if (t.requires_grad(ib)) {
            auto& gb = t.grad_mut(ib);
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t j = 0; j < c; ++j) gb[j] += g[r * c + j];
        }
        if (t.requires_grad(ix)) {
            auto& gx = t.grad_mut(ix);
            const double inv_c = 1.0 / static_cast<double>(c);
            for (std::size_t r = 0; r < rows; ++r) {
                double m1 = 0.0, m2 = 0.0;
                for (std::size_t j = 0; j < c; ++j) {
                    const double dxh = g[r * c + j] * G[j];
                    m1 += dxh;
                    m2 += dxh * xhat[r * c + j];
                }
                m1 *= inv_c;
                m2 *= inv_c;
                for (std::size_t j = 0; j < c; ++j) {
                    const double dxh = g[r * c + j] * G[j];
                    gx[r * c + j] += inv_std[r] * (dxh - m1 - xhat[r * c + j] * m2);
                }
            }
        }
    }, "layer_norm");
}

Var conv1d(Var x, Var weight, Var bias, bool causal) {
    const auto& X = x.value();
    const auto& Wt = weight.value();
    require(X.rank() == 3 && Wt.rank() == 3 && Wt.dim(1) == X.dim(2), "conv1d",
            shape_str(X.shape()) + " * " + shape_str(Wt.shape()));
    const std::size_t nodes = X.dim(0), T = X.dim(1), C = X.dim(2), K = Wt.dim(0), D = Wt.dim(2);
    require(bias.value().rank() == 1 && bias.shape()[0] == D, "conv1d", "bias must have the output width");
    require(causal || K % 2 == 1, "conv1d", "centred convolution needs an odd kernel");
    const long shift = causal ? static_cast<long>(K) - 1 : static_cast<long>(K / 2);
    Tensor out({nodes, T, D}, 0.0);
    const auto& Bv = bias.value();
    for (std::size_t r = 0; r < nodes * T; ++r) std::copy(Bv.data(), Bv.data() + D, out.data() + r * D);
    // Tap k reads x[t - shift + k]; valid output rows form one contiguous run per node.
    auto span_of = [T, shift](std::size_t k, std::size_t& lo, std::size_t& hi) {
        const long off = static_cast<long>(k) - shift;
        lo = static_cast<std::size_t>(std::max(0L, -off));
        hi = static_cast<std::size_t>(std::min(static_cast<long>(T), static_cast<long>(T) - off));
        return off;
    };
    for (std::size_t n = 0; n < nodes; ++n)
        for (std::size_t k = 0; k < K; ++k) {
            std::size_t lo, hi;
            const long off = span_of(k, lo, hi);
            if (lo >= hi) continue;
            gemm_nn(X.data() + (n * T + static_cast<std::size_t>(static_cast<long>(lo) + off)) * C, Wt.data() + k * C * D,
                    out.data() + (n * T + lo) * D, hi - lo, C, D);
        }
    const auto ix = x.id(), iw = weight.id(), ib = bias.id();
    return x.tape().push(std::move(out), {x, weight, bias},
                         [ix, iw, ib, nodes, T, C, K, D, span_of](Tape& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        const auto& X = t.value(ix);
        const auto& Wt = t.value(iw);
        const bool gx_on = t.requires_grad(ix), gw_on = t.requires_grad(iw), gb_on = t.requires_grad(ib);
        double* gx = gx_on ? t.grad_mut(ix).data() : nullptr;
        double* gw = gw_on ? t.grad_mut(iw).data() : nullptr;
        double* gb = gb_on ? t.grad_mut(ib).data() : nullptr;
        if (gb_on)
            for (std::size_t r = 0; r < nodes * T; ++r)
                for (std::size_t d = 0; d < D; ++d) gb[d] += g[r * D + d];
        for (std::size_t n = 0; n < nodes; ++n)
            for (std::size_t k = 0; k < K; ++k) {
                std::size_t lo, hi;
                const long off = span_of(k, lo, hi);
                if (lo >= hi) continue;
                const std::size_t src = n * T + static_cast<std::size_t>(static_cast<long>(lo) + off);
                const double* grows = g.data() + (n * T + lo) * D;
                if (gx_on) gemm_nt(grows, Wt.data() + k * C * D, gx + src * C, hi - lo, D, C);
                if (gw_on) gemm_tn(X.data() + src * C, grows, gw + k * C * D, hi - lo, C, D);
            }
    }, "conv1d");
}

Var dropout(Var x, double rate, std::mt19937_64& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) fail(ErrorKind::InvalidArgument, "InvalidRate", "dropout rate must lie in [0,1)");
    if (rate == 0.0) return x;
    std::bernoulli_distribution keep(1.0 - rate);
    Tensor m(x.shape(), 0.0);
    const double s = 1.0 / (1.0 - rate);
    for (auto& v : m.values()) v = keep(rng) ? s : 0.0;
    return mul_const(x, m);
}

// ---------------------------------------------------------------- reductions

Var sum(Var x) {
    Tensor out({1}, exact_sum(x.value().values()));
    const auto ix = x.id();
    return x.tape().push(std::move(out), {x}, [ix](Tape& t, std::size_t self) {
        const double g = t.grad_of(self)[0];
        auto& gx = t.grad_mut(ix);
        for (auto& v : gx.values()) v += g;
    }, "sum");
}

Var mean(Var x) { return scale(sum(x), 1.0 / static_cast<double>(x.value().size())); }

Var l1_loss(Var pred, const Tensor& target) {
    require(pred.shape() == target.shape(), "l1_loss", shape_str(pred.shape()) + " vs " + shape_str(target.shape()));
    const auto& P = pred.value();
    std::vector<double> absdiff(P.size());
    for (std::size_t i = 0; i < P.size(); ++i) absdiff[i] = std::fabs(P[i] - target[i]);
    const double n = static_cast<double>(P.size());
    Tensor out({1}, exact_sum(absdiff) / n);
    const auto ip = pred.id();
    return pred.tape().push(std::move(out), {pred}, [ip, target, n](Tape& t, std::size_t self) {
        const double g = t.grad_of(self)[0] / n;
        const auto& P = t.value(ip);
        auto& gp = t.grad_mut(ip);
        for (std::size_t i = 0; i < P.size(); ++i) {
            const double d = P[i] - target[i];
            gp[i] += d > 0.0 ? g : (d < 0.0 ? -g : 0.0);
        }
    }, "l1_loss");
}

// ---------------------------------------------------------------- grad check

GradCheckResult grad_check(const ScalarFn& fn, const std::vector<Tensor>& params, double eps, std::size_t max_coords,
                           std::uint64_t seed) {
    auto evaluate = [&](const std::vector<Tensor>& ps, std::vector<Tensor>* grads) {
        Tape tape;
        std::vector<Var> vars;
        vars.reserve(ps.size());
        for (const auto& p : ps) vars.push_back(tape.variable(p));
        Var out = fn(tape, vars);
        if (out.value().size() != 1) fail(ErrorKind::InvalidArgument, "NonScalarRoot", "grad_check needs a scalar");
        if (grads) {
            tape.backward(out);
            grads->clear();
            for (const auto& v : vars) grads->push_back(tape.grad(v));
        }
        return out.value()[0];
    };

    std::vector<Tensor> analytic;
    evaluate(params, &analytic);

    GradCheckResult res;
    std::mt19937_64 rng(seed);
    std::vector<Tensor> work = params;
    for (std::size_t p = 0; p < params.size(); ++p) {
        std::vector<std::size_t> coords(params[p].size());
        std::iota(coords.begin(), coords.end(), std::size_t{0});
        if (coords.size() > max_coords) {
            std::shuffle(coords.begin(), coords.end(), rng);
            coords.resize(max_coords);
        }
        for (auto c : coords) {
            const double orig = work[p][c];
            work[p][c] = orig + eps;
            const double fp = evaluate(work, nullptr);
            work[p][c] = orig - eps;
            const double fm = evaluate(work, nullptr);
            work[p][c] = orig;
            const double numeric = (fp - fm) / (2.0 * eps);
            const double a = analytic[p][c];
            const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-6});
            res.max_rel_error = std::max(res.max_rel_error, std::fabs(a - numeric) / denom);
            ++res.coordinates;
        }
    }
    return res;
}

} // namespace roadrisk::nn
