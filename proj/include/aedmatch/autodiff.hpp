#pragma once

// Reverse-mode differentiation over dense matrices.
//
// A Tape records every value produced during a forward pass together with a
// closure that pushes the output adjoint back into the inputs. Nodes are
// appended in evaluation order, so walking the tape backwards is a valid
// topological order. Each primitive validates shapes and rejects non-finite
// results.

#include <aedmatch/errors.hpp>
#include <aedmatch/tensor.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace aedmatch::ad {

class Tape;

/// Handle to a value on a tape.
class Var {
public:
    Var() = default;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape& tape() const { return *tape_; }
    std::size_t id() const noexcept { return id_; }
    const Tensor& value() const;
    const Tensor& grad() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
    double scalar() const { return value()[0]; }

private:
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

class Tape {
public:
    using Backward = std::function<void(Tape&, std::size_t)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value) { return push(std::move(value), false, nullptr); }
    Var variable(Tensor value) { return push(std::move(value), true, nullptr); }

    /// Records an op result. `inputs` decide whether the result needs an
    /// adjoint; the closure is dropped when none of them do.
    Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward, const char* op) {
        if (!value.all_finite()) throw NumericError(std::string("non-finite result in ") + op);
        bool needs = false;
        for (const Var& v : inputs) needs = needs || nodes_[v.id()].needs_grad;
        return push(std::move(value), needs, needs ? std::move(backward) : nullptr);
    }

    Var record(Tensor value, std::span<const Var> inputs, Backward backward, const char* op) {
        if (!value.all_finite()) throw NumericError(std::string("non-finite result in ") + op);
        bool needs = false;
        for (const Var& v : inputs) needs = needs || nodes_[v.id()].needs_grad;
        return push(std::move(value), needs, needs ? std::move(backward) : nullptr);
    }

    const Tensor& value(std::size_t id) const { return nodes_[id].value; }
    const Tensor& grad(std::size_t id) const { return nodes_[id].grad; }
    bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }

    /// Adjoint slot of an input, allocated on first use. Returns nullptr for
    /// nodes that do not need gradients.
    Tensor* grad_slot(std::size_t id) {
        Node& n = nodes_[id];
        if (!n.needs_grad) return nullptr;
        if (n.grad.size() != n.value.size() || !n.grad.same_shape(n.value)) n.grad = Tensor(n.value.rows(), n.value.cols());
        return &n.grad;
    }

    /// Back-propagates from a 1x1 output.
    void backward(Var output) {
        if (output.value().size() != 1) throw NumericError("backward needs a scalar output");
        for (Node& n : nodes_) n.grad = Tensor();
        Tensor* seed = grad_slot(output.id());
        if (seed == nullptr) return;
        (*seed)[0] = 1.0;
        for (std::size_t id = output.id() + 1; id-- > 0;) {
            Node& n = nodes_[id];
            if (n.backward && n.grad.size() != 0) n.backward(*this, id);
        }
    }

    std::size_t size() const noexcept { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        Backward backward;
        bool needs_grad = false;
    };

    Var push(Tensor value, bool needs, Backward backward) {
        nodes_.push_back(Node{std::move(value), Tensor(), std::move(backward), needs});
        return Var(this, nodes_.size() - 1);
    }

    std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }
inline const Tensor& Var::grad() const { return tape_->grad(id_); }

// ---------------------------------------------------------------------------

/// 0/1 mask with the shape of the logits it applies to.
struct Mask {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> allowed;

    Mask() = default;
    Mask(std::size_t r, std::size_t c, bool fill = false) : rows(r), cols(c), allowed(r * c, fill ? 1 : 0) {}
    bool operator()(std::size_t i, std::size_t j) const { return allowed[i * cols + j] != 0; }
    void set(std::size_t i, std::size_t j, bool v = true) { allowed[i * cols + j] = v ? 1 : 0; }
};

enum class EmptyRows {
    error,  // an all-masked row is a NumericError
    zero,   // an all-masked row yields an all-zero probability row
};

namespace detail {

inline void require(bool ok, const std::string& what) {
    if (!ok) throw NumericError(what);
}

inline void same_shape(const Var& a, const Var& b, const char* op) {
    require(a.value().same_shape(b.value()),
            std::string(op) + ": shape mismatch " + a.value().shape_string() + " vs " + b.value().shape_string());
}

inline void accumulate(Tape& t, const Var& into, const Tensor& g) {
    if (Tensor* slot = t.grad_slot(into.id()))
        for (std::size_t k = 0; k < g.size(); ++k) (*slot)[k] += g[k];
}

}  // namespace detail

inline Var matmul(Var a, Var b) {
    detail::require(a.cols() == b.rows(),
                    "matmul: shape mismatch " + a.value().shape_string() + " * " + b.value().shape_string());
    Tensor out = linalg::matmul(a.value(), b.value());
    return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        if (Tensor* ga = t.grad_slot(a.id())) linalg::gemm_nt_acc(g, b.value(), *ga);
        if (Tensor* gb = t.grad_slot(b.id())) linalg::gemm_tn_acc(a.value(), g, *gb);
    }, "matmul");
}

inline Var transpose(Var a) {
    const Tensor& x = a.value();
    Tensor out(x.cols(), x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) out(j, i) = x(i, j);
    return a.tape().record(std::move(out), {a}, [a](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        if (Tensor* ga = t.grad_slot(a.id()))
            for (std::size_t i = 0; i < ga->rows(); ++i)
                for (std::size_t j = 0; j < ga->cols(); ++j) (*ga)(i, j) += g(j, i);
    }, "transpose");
}

/// Concatenation along columns (axis 1) or rows (axis 0).
inline Var concat(std::vector<Var> parts, int axis) {
    detail::require(!parts.empty(), "concat: no inputs");
    detail::require(axis == 0 || axis == 1, "concat: axis must be 0 or 1");
    Tape& tape = parts.front().tape();
    std::size_t rows = 0, cols = 0;
    for (const Var& p : parts) {
        if (axis == 1) {
            detail::require(p.rows() == parts.front().rows(), "concat: row count mismatch");
            rows = p.rows();
            cols += p.cols();
        } else {
            detail::require(p.cols() == parts.front().cols(), "concat: column count mismatch");
            cols = p.cols();
            rows += p.rows();
        }
    }
    Tensor out(rows, cols);
    std::size_t offset = 0;
    for (const Var& p : parts) {
        const Tensor& x = p.value();
        for (std::size_t i = 0; i < x.rows(); ++i)
            for (std::size_t j = 0; j < x.cols(); ++j) {
                if (axis == 1)
                    out(i, offset + j) = x(i, j);
                else
                    out(offset + i, j) = x(i, j);
            }
        offset += axis == 1 ? x.cols() : x.rows();
    }
    return tape.record(std::move(out), std::span<const Var>(parts), [parts, axis](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        std::size_t off = 0;
        for (const Var& p : parts) {
            const std::size_t r = p.rows(), c = p.cols();
            if (Tensor* gp = t.grad_slot(p.id()))
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < c; ++j) (*gp)(i, j) += axis == 1 ? g(i, off + j) : g(off + i, j);
            off += axis == 1 ? c : r;
        }
    }, "concat");
}

inline Var add(Var a, Var b) {
    detail::same_shape(a, b, "add");
    Tensor out = a.value();
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += b.value()[k];
    return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
        detail::accumulate(t, a, t.grad(self));
        detail::accumulate(t, b, t.grad(self));
    }, "add");
}

inline Var sub(Var a, Var b) {
    detail::same_shape(a, b, "sub");
    Tensor out = a.value();
    for (std::size_t k = 0; k < out.size(); ++k) out[k] -= b.value()[k];
    return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
        detail::accumulate(t, a, t.grad(self));
        if (Tensor* gb = t.grad_slot(b.id()))
            for (std::size_t k = 0; k < gb->size(); ++k) (*gb)[k] -= t.grad(self)[k];
    }, "sub");
}

/// Elementwise product.
inline Var mul(Var a, Var b) {
    detail::same_shape(a, b, "mul");
    Tensor out = a.value();
    for (std::size_t k = 0; k < out.size(); ++k) out[k] *= b.value()[k];
    return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        if (Tensor* ga = t.grad_slot(a.id()))
            for (std::size_t k = 0; k < g.size(); ++k) (*ga)[k] += g[k] * b.value()[k];
        if (Tensor* gb = t.grad_slot(b.id()))
            for (std::size_t k = 0; k < g.size(); ++k) (*gb)[k] += g[k] * a.value()[k];
    }, "mul");
}

inline Var scale(Var a, double factor) {
    Tensor out = a.value();
    for (double& v : out.values()) v *= factor;
    return a.tape().record(std::move(out), {a}, [a, factor](Tape& t, std::size_t self) {
        if (Tensor* ga = t.grad_slot(a.id()))
            for (std::size_t k = 0; k < ga->size(); ++k) (*ga)[k] += factor * t.grad(self)[k];
    }, "scale");
}

inline Var add_scalar(Var a, double c) {
    Tensor out = a.value();
    for (double& v : out.values()) v += c;
    return a.tape().record(std::move(out), {a}, [a](Tape& t, std::size_t self) {
        detail::accumulate(t, a, t.grad(self));
    }, "add_scalar");
}

/// a (n x m) + b (1 x m) broadcast over rows.
inline Var add_row(Var a, Var b) {
    detail::require(b.rows() == 1 && b.cols() == a.cols(),
                    "add_row: expected 1x" + std::to_string(a.cols()) + " got " + b.value().shape_string());
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += b.value()(0, j);
    return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        detail::accumulate(t, a, g);
        if (Tensor* gb = t.grad_slot(b.id()))
            for (std::size_t i = 0; i < g.rows(); ++i)
                for (std::size_t j = 0; j < g.cols(); ++j) (*gb)(0, j) += g(i, j);
    }, "add_row");
}

/// col (n x 1) + row (1 x m) -> n x m.
inline Var outer_add(Var col, Var row) {
    detail::require(col.cols() == 1 && row.rows() == 1, "outer_add: expected n x 1 and 1 x m");
    const std::size_t n = col.rows(), m = row.cols();
    Tensor out(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) out(i, j) = col.value()[i] + row.value()[j];
    return col.tape().record(std::move(out), {col, row}, [col, row, n, m](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor* gc = t.grad_slot(col.id());
        Tensor* gr = t.grad_slot(row.id());
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                if (gc) (*gc)[i] += g(i, j);
                if (gr) (*gr)[j] += g(i, j);
            }
    }, "outer_add");
}

inline Var leaky_relu(Var a, double slope = 0.2) {
    Tensor out = a.value();
    for (double& v : out.values()) v = v > 0.0 ? v : slope * v;
    return a.tape().record(std::move(out), {a}, [a, slope](Tape& t, std::size_t self) {
        if (Tensor* ga = t.grad_slot(a.id()))
            for (std::size_t k = 0; k < ga->size(); ++k)
                (*ga)[k] += t.grad(self)[k] * (a.value()[k] > 0.0 ? 1.0 : slope);
    }, "leaky_relu");
}

inline Var sigmoid(Var a) {
    Tensor out = a.value();
    for (double& v : out.values()) v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    return a.tape().record(std::move(out), {a}, [a](Tape& t, std::size_t self) {
        const Tensor& y = t.value(self);
        if (Tensor* ga = t.grad_slot(a.id()))
            for (std::size_t k = 0; k < ga->size(); ++k) (*ga)[k] += t.grad(self)[k] * y[k] * (1.0 - y[k]);
    }, "sigmoid");
}

/// Elementwise |a|, subgradient 0 at 0.
inline Var abs_value(Var a) {
    Tensor out = a.value();
    for (double& v : out.values()) v = std::abs(v);
    return a.tape().record(std::move(out), {a}, [a](Tape& t, std::size_t self) {
        if (Tensor* ga = t.grad_slot(a.id()))
            for (std::size_t k = 0; k < ga->size(); ++k) {
                const double x = a.value()[k];
                (*ga)[k] += t.grad(self)[k] * (x > 0.0 ? 1.0 : x < 0.0 ? -1.0 : 0.0);
            }
    }, "abs_value");
}

/// a / s for a 1x1 variable s.
inline Var div_scalar(Var a, Var s) {
    detail::require(s.value().size() == 1, "div_scalar: divisor must be 1x1");
    const double d = s.scalar();
    detail::require(d != 0.0, "div_scalar: division by zero");
    Tensor out = a.value();
    for (double& v : out.values()) v /= d;
    return a.tape().record(std::move(out), {a, s}, [a, s](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const double dv = s.scalar();
        if (Tensor* ga = t.grad_slot(a.id()))
            for (std::size_t k = 0; k < g.size(); ++k) (*ga)[k] += g[k] / dv;
        if (Tensor* gs = t.grad_slot(s.id())) {
            double acc = 0.0;
            for (std::size_t k = 0; k < g.size(); ++k) acc += g[k] * a.value()[k];
            (*gs)[0] -= acc / (dv * dv);
        }
    }, "div_scalar");
}

/// Row-wise softmax of logits / temperature restricted to allowed entries.
/// Masked entries get exactly 0. The row max over allowed entries is
/// subtracted before exponentiation.
inline Var row_softmax_masked(Var logits, const Mask& mask, double temperature = 1.0,
                              EmptyRows empty = EmptyRows::error) {
    const Tensor& x = logits.value();
    detail::require(mask.rows == x.rows() && mask.cols == x.cols(), "row_softmax_masked: mask shape mismatch");
    detail::require(temperature > 0.0, "row_softmax_masked: temperature must be > 0");
    Tensor out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < x.cols(); ++j)
            if (mask(i, j)) mx = std::max(mx, x(i, j) / temperature);
        if (mx == -std::numeric_limits<double>::infinity()) {
            detail::require(empty == EmptyRows::zero, "row_softmax_masked: row " + std::to_string(i) + " fully masked");
            continue;
        }
        double z = 0.0;
        for (std::size_t j = 0; j < x.cols(); ++j)
            if (mask(i, j)) z += (out(i, j) = std::exp(x(i, j) / temperature - mx));
        for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) /= z;
    }
    return logits.tape().record(std::move(out), {logits}, [logits, temperature](Tape& t, std::size_t self) {
        Tensor* gx = t.grad_slot(logits.id());
        if (!gx) return;
        const Tensor& y = t.value(self);
        const Tensor& g = t.grad(self);
        for (std::size_t i = 0; i < y.rows(); ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < y.cols(); ++j) dot += y(i, j) * g(i, j);
            for (std::size_t j = 0; j < y.cols(); ++j) (*gx)(i, j) += y(i, j) * (g(i, j) - dot) / temperature;
        }
    }, "row_softmax_masked");
}

/// Row-wise softmax with a variable 1x1 temperature (full rows, no mask).
inline Var row_softmax(Var logits, Var temperature) {
    Mask all(logits.rows(), logits.cols(), true);
    return row_softmax_masked(div_scalar(logits, temperature), all);
}

/// Euclidean norm of each row -> n x 1. The subgradient at 0 is taken as 0.
inline Var row_l2_norm(Var a) {
    const Tensor& x = a.value();
    Tensor out(x.rows(), 1);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double s = 0.0;
        for (double v : x.row(i)) s += v * v;
        out[i] = std::sqrt(s);
    }
    return a.tape().record(std::move(out), {a}, [a](Tape& t, std::size_t self) {
        Tensor* ga = t.grad_slot(a.id());
        if (!ga) return;
        const Tensor& y = t.value(self);
        for (std::size_t i = 0; i < y.rows(); ++i) {
            if (y[i] == 0.0) continue;
            const double f = t.grad(self)[i] / y[i];
            for (std::size_t j = 0; j < ga->cols(); ++j) (*ga)(i, j) += f * a.value()(i, j);
        }
    }, "row_l2_norm");
}

/// Sum over `axis`: axis 1 gives row sums (n x 1), axis 0 column sums (1 x m).
inline Var sum(Var a, int axis) {
    const Tensor& x = a.value();
    detail::require(axis == 0 || axis == 1, "sum: axis must be 0 or 1");
    Tensor out = axis == 1 ? Tensor(x.rows(), 1) : Tensor(1, x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) out[axis == 1 ? i : j] += x(i, j);
    return a.tape().record(std::move(out), {a}, [a, axis](Tape& t, std::size_t self) {
        Tensor* ga = t.grad_slot(a.id());
        if (!ga) return;
        const Tensor& g = t.grad(self);
        for (std::size_t i = 0; i < ga->rows(); ++i)
            for (std::size_t j = 0; j < ga->cols(); ++j) (*ga)(i, j) += g[axis == 1 ? i : j];
    }, "sum");
}

inline Var mean(Var a, int axis) {
    const std::size_t n = axis == 1 ? a.cols() : a.rows();
    detail::require(n > 0, "mean: empty axis");
    return scale(sum(a, axis), 1.0 / static_cast<double>(n));
}

inline Var sum_all(Var a) { return sum(sum(a, 1), 0); }

inline Var mean_all(Var a) {
    detail::require(a.value().size() > 0, "mean_all: empty tensor");
    return scale(sum_all(a), 1.0 / static_cast<double>(a.value().size()));
}

/// Column-wise maximum -> 1 x m. Ties send the adjoint to the first maximum.
inline Var max_rows(Var a) {
    const Tensor& x = a.value();
    detail::require(x.rows() > 0, "max_rows: empty tensor");
    Tensor out(1, x.cols());
    std::vector<std::size_t> arg(x.cols(), 0);
    for (std::size_t j = 0; j < x.cols(); ++j) {
        out[j] = x(0, j);
        for (std::size_t i = 1; i < x.rows(); ++i)
            if (x(i, j) > out[j]) {
                out[j] = x(i, j);
                arg[j] = i;
            }
    }
    return a.tape().record(std::move(out), {a}, [a, arg](Tape& t, std::size_t self) {
        if (Tensor* ga = t.grad_slot(a.id()))
            for (std::size_t j = 0; j < arg.size(); ++j) (*ga)(arg[j], j) += t.grad(self)[j];
    }, "max_rows");
}

inline Var select_rows(Var a, std::vector<std::size_t> rows) {
    const Tensor& x = a.value();
    Tensor out(rows.size(), x.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        detail::require(rows[r] < x.rows(), "select_rows: index out of range");
        for (std::size_t j = 0; j < x.cols(); ++j) out(r, j) = x(rows[r], j);
    }
    return a.tape().record(std::move(out), {a}, [a, rows](Tape& t, std::size_t self) {
        Tensor* ga = t.grad_slot(a.id());
        if (!ga) return;
        const Tensor& g = t.grad(self);
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t j = 0; j < g.cols(); ++j) (*ga)(rows[r], j) += g(r, j);
    }, "select_rows");
}

/// Columns [begin, end).
inline Var slice_cols(Var a, std::size_t begin, std::size_t end) {
    const Tensor& x = a.value();
    detail::require(begin <= end && end <= x.cols(), "slice_cols: range outside " + x.shape_string());
    Tensor out(x.rows(), end - begin);
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = begin; j < end; ++j) out(i, j - begin) = x(i, j);
    return a.tape().record(std::move(out), {a}, [a, begin](Tape& t, std::size_t self) {
        Tensor* ga = t.grad_slot(a.id());
        if (!ga) return;
        const Tensor& g = t.grad(self);
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) (*ga)(i, j + begin) += g(i, j);
    }, "slice_cols");
}

/// Rows scaled to unit length; zero rows stay zero.
inline Var row_normalize(Var a) {
    const Tensor& x = a.value();
    Tensor out = x;
    std::vector<double> norms(x.rows(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double s = 0.0;
        for (double v : x.row(i)) s += v * v;
        norms[i] = std::sqrt(s);
        if (norms[i] > 0.0)
            for (double& v : out.row(i)) v /= norms[i];
    }
    return a.tape().record(std::move(out), {a}, [a, norms](Tape& t, std::size_t self) {
        Tensor* ga = t.grad_slot(a.id());
        if (!ga) return;
        const Tensor& y = t.value(self);
        const Tensor& g = t.grad(self);
        for (std::size_t i = 0; i < y.rows(); ++i) {
            if (norms[i] == 0.0) continue;
            double dot = 0.0;
            for (std::size_t j = 0; j < y.cols(); ++j) dot += y(i, j) * g(i, j);
            for (std::size_t j = 0; j < y.cols(); ++j) (*ga)(i, j) += (g(i, j) - y(i, j) * dot) / norms[i];
        }
    }, "row_normalize");
}

/// S_ij = cos(a_i, b_j); rows of zero norm have similarity 0 to everything.
inline Var cosine_similarity_matrix(Var a, Var b) {
    detail::require(a.cols() == b.cols(), "cosine_similarity_matrix: embedding widths differ");
    return matmul(row_normalize(a), transpose(row_normalize(b)));
}

/// S_ij = -|a_i - b_j|^2.
inline Var neg_sq_euclidean_matrix(Var a, Var b) {
    detail::require(a.cols() == b.cols(), "neg_sq_euclidean_matrix: embedding widths differ");
    Var cross = scale(matmul(a, transpose(b)), 2.0);
    Var na = sum(mul(a, a), 1);
    Var nb = transpose(sum(mul(b, b), 1));
    return sub(cross, outer_add(na, nb));
}

struct DenseLayer {
    Var weight;  // in x out
    Var bias;    // 1 x out
};

/// Dense layers with LeakyReLU(slope) between them and a linear output.
inline Var mlp_apply(Var x, std::span<const DenseLayer> layers, double slope = 0.2) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
        x = add_row(matmul(x, layers[l].weight), layers[l].bias);
        if (l + 1 < layers.size()) x = leaky_relu(x, slope);
    }
    return x;
}

}  // namespace aedmatch::ad
