#ifndef TSNAS_TENSOR_HPP
#define TSNAS_TENSOR_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "tsnas/errors.hpp"
#include "tsnas/rng.hpp"

namespace tsnas {

// Dense row-major matrix of doubles with reverse-mode autodiff. Scalars are
// 1x1. A Graph owns the tape of intermediate nodes recorded during forward;
// parameters live outside the tape and survive Graph::reset().

struct Node {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
    std::function<void()> backprop; // empty for leaves

    std::size_t size() const { return rows * cols; }
    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    }
};

class Graph;

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

    bool valid() const { return node_ != nullptr; }
    std::size_t rows() const { return node_->rows; }
    std::size_t cols() const { return node_->cols; }
    std::size_t size() const { return node_->size(); }
    bool requires_grad() const { return node_->requires_grad; }

    std::vector<double>& data() { return node_->value; }
    const std::vector<double>& data() const { return node_->value; }
    std::vector<double>& grad() {
        node_->ensure_grad();
        return node_->grad;
    }
    const std::vector<double>& grad() const { return node_->grad; }

    double& at(std::size_t r, std::size_t c) { return node_->value[r * node_->cols + c]; }
    double at(std::size_t r, std::size_t c) const { return node_->value[r * node_->cols + c]; }
    double item() const {
        if (size() != 1) throw ContractError("item() on non-scalar tensor");
        return node_->value[0];
    }

    void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

    std::shared_ptr<Node> node() const { return node_; }

private:
    std::shared_ptr<Node> node_;
};

inline std::string shape_str(const Tensor& t) {
    return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

class Graph {
public:
    // Leaf tensor, optionally trainable. Not placed on the tape.
    static Tensor leaf(std::size_t rows, std::size_t cols, std::vector<double> data,
                       bool requires_grad = false) {
        if (data.size() != rows * cols)
            throw ContractError("leaf: data length " + std::to_string(data.size()) +
                                " != " + std::to_string(rows * cols));
        auto n = std::make_shared<Node>();
        n->rows = rows;
        n->cols = cols;
        n->value = std::move(data);
        n->requires_grad = requires_grad;
        if (requires_grad) n->ensure_grad();
        return Tensor(n);
    }

    static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false) {
        return leaf(rows, cols, std::vector<double>(rows * cols, 0.0), requires_grad);
    }

    static Tensor scalar(double v) { return leaf(1, 1, {v}); }

    Tensor record(std::size_t rows, std::size_t cols, bool requires_grad) {
        auto n = std::make_shared<Node>();
        n->rows = rows;
        n->cols = cols;
        n->value.assign(rows * cols, 0.0);
        n->requires_grad = requires_grad;
        if (requires_grad) n->ensure_grad();
        tape_.push_back(n);
        return Tensor(n);
    }

    // Seeds d(loss)/d(loss) = 1 and replays the tape in reverse. Exactly one
    // backward per forward recording; reset() re-arms.
    void backward(const Tensor& loss) {
        if (loss.size() != 1)
            throw ContractError("backward: loss must be scalar, got " + shape_str(loss));
        if (backward_done_)
            throw StateError("backward called twice without Graph::reset()");
        backward_done_ = true;
        loss.node()->ensure_grad();
        loss.node()->grad[0] = 1.0;
        for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) {
            if ((*it)->requires_grad && (*it)->backprop) (*it)->backprop();
        }
    }

    // Drops intermediates and re-arms backward. Parameter leaves are unaffected.
    void reset() {
        tape_.clear();
        backward_done_ = false;
    }

    std::size_t tape_size() const { return tape_.size(); }

private:
    std::vector<std::shared_ptr<Node>> tape_;
    bool backward_done_ = false;
};

namespace detail {
inline bool same_shape(const Tensor& a, const Tensor& b) {
    return a.rows() == b.rows() && a.cols() == b.cols();
}
inline void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (!same_shape(a, b))
        throw DimensionError(std::string(op) + ": shapes " + shape_str(a) + " and " +
                             shape_str(b) + " differ");
}
} // namespace detail

// ---- core ops ----

inline Tensor matmul(Graph& g, const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows())
        throw DimensionError("matmul: inner dimensions disagree, " + shape_str(a) + " * " +
                             shape_str(b));
    const std::size_t n = a.rows(), k = a.cols(), p = b.cols();
    Tensor out = g.record(n, p, a.requires_grad() || b.requires_grad());
    auto& c = out.data();
    const auto& av = a.data();
    const auto& bv = b.data();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double aik = av[i * k + kk];
            for (std::size_t j = 0; j < p; ++j) c[i * p + j] += aik * bv[kk * p + j];
        }
    if (out.requires_grad()) {
        auto an = a.node(), bn = b.node(), on = out.node();
        out.node()->backprop = [an, bn, on, n, k, p] {
            const auto& dc = on->grad;
            if (an->requires_grad) {
                an->ensure_grad();
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t kk = 0; kk < k; ++kk) {
                        double acc = 0.0;
                        for (std::size_t j = 0; j < p; ++j)
                            acc += dc[i * p + j] * bn->value[kk * p + j];
                        an->grad[i * k + kk] += acc;
                    }
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (std::size_t kk = 0; kk < k; ++kk)
                    for (std::size_t j = 0; j < p; ++j) {
                        double acc = 0.0;
                        for (std::size_t i = 0; i < n; ++i)
                            acc += an->value[i * k + kk] * dc[i * p + j];
                        bn->grad[kk * p + j] += acc;
                    }
            }
        };
    }
    return out;
}

inline Tensor transpose(Graph& g, const Tensor& a) {
    const std::size_t n = a.rows(), p = a.cols();
    Tensor out = g.record(p, n, a.requires_grad());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) out.data()[j * n + i] = a.data()[i * p + j];
    if (out.requires_grad()) {
        auto an = a.node(), on = out.node();
        out.node()->backprop = [an, on, n, p] {
            an->ensure_grad();
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < p; ++j) an->grad[i * p + j] += on->grad[j * n + i];
        };
    }
    return out;
}

namespace detail {

template <class Fwd, class Bwd>
Tensor binary_same(Graph& g, const char* name, const Tensor& a, const Tensor& b, Fwd fwd,
                   Bwd bwd) {
    check_same_shape(name, a, b);
    Tensor out = g.record(a.rows(), a.cols(), a.requires_grad() || b.requires_grad());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = fwd(a.data()[i], b.data()[i]);
    if (out.requires_grad()) {
        auto an = a.node(), bn = b.node(), on = out.node();
        out.node()->backprop = [an, bn, on, bwd] {
            if (an->requires_grad) an->ensure_grad();
            if (bn->requires_grad) bn->ensure_grad();
            for (std::size_t i = 0; i < on->value.size(); ++i) {
                double da, db;
                bwd(an->value[i], bn->value[i], da, db);
                if (an->requires_grad) an->grad[i] += da * on->grad[i];
                if (bn->requires_grad) bn->grad[i] += db * on->grad[i];
            }
        };
    }
    return out;
}

template <class Fwd, class Bwd>
Tensor unary(Graph& g, const Tensor& a, Fwd fwd, Bwd bwd) {
    Tensor out = g.record(a.rows(), a.cols(), a.requires_grad());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = fwd(a.data()[i]);
    if (out.requires_grad()) {
        auto an = a.node(), on = out.node();
        out.node()->backprop = [an, on, bwd] {
            an->ensure_grad();
            for (std::size_t i = 0; i < on->value.size(); ++i)
                an->grad[i] += bwd(an->value[i], on->value[i]) * on->grad[i];
        };
    }
    return out;
}

} // namespace detail

inline Tensor add(Graph& g, const Tensor& a, const Tensor& b) {
    return detail::binary_same(g, "add", a, b, [](double x, double y) { return x + y; },
                               [](double, double, double& da, double& db) {
                                   da = 1.0;
                                   db = 1.0;
                               });
}

inline Tensor sub(Graph& g, const Tensor& a, const Tensor& b) {
    return detail::binary_same(g, "sub", a, b, [](double x, double y) { return x - y; },
                               [](double, double, double& da, double& db) {
                                   da = 1.0;
                                   db = -1.0;
                               });
}

inline Tensor mul(Graph& g, const Tensor& a, const Tensor& b) {
    return detail::binary_same(g, "mul", a, b, [](double x, double y) { return x * y; },
                               [](double x, double y, double& da, double& db) {
                                   da = y;
                                   db = x;
                               });
}

inline Tensor scale(Graph& g, const Tensor& a, double c) {
    return detail::unary(g, a, [c](double x) { return c * x; },
                         [c](double, double) { return c; });
}

inline Tensor add_scalar(Graph& g, const Tensor& a, double c) {
    return detail::unary(g, a, [c](double x) { return x + c; },
                         [](double, double) { return 1.0; });
}

inline Tensor relu(Graph& g, const Tensor& a) {
    return detail::unary(g, a, [](double x) { return x > 0.0 ? x : 0.0; },
                         [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

inline Tensor leaky_relu(Graph& g, const Tensor& a, double slope = 0.01) {
    return detail::unary(g, a, [slope](double x) { return x > 0.0 ? x : slope * x; },
                         [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

inline Tensor sigmoid(Graph& g, const Tensor& a) {
    return detail::unary(g, a,
                         [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                         [](double, double y) { return y * (1.0 - y); });
}

inline Tensor tanh_op(Graph& g, const Tensor& a) {
    return detail::unary(g, a, [](double x) { return std::tanh(x); },
                         [](double, double y) { return 1.0 - y * y; });
}

// Row-broadcast: b is 1xp added to every row of a (nxp). Used for biases and
// for adding a fixed positional-encoding row pattern.
inline Tensor add_rowvec(Graph& g, const Tensor& a, const Tensor& b) {
    if (b.rows() != 1 || b.cols() != a.cols())
        throw DimensionError("add_rowvec: " + shape_str(a) + " + " + shape_str(b));
    const std::size_t n = a.rows(), p = a.cols();
    Tensor out = g.record(n, p, a.requires_grad() || b.requires_grad());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j)
            out.data()[i * p + j] = a.data()[i * p + j] + b.data()[j];
    if (out.requires_grad()) {
        auto an = a.node(), bn = b.node(), on = out.node();
        out.node()->backprop = [an, bn, on, n, p] {
            if (an->requires_grad) {
                an->ensure_grad();
                for (std::size_t i = 0; i < n * p; ++i) an->grad[i] += on->grad[i];
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < p; ++j) bn->grad[j] += on->grad[i * p + j];
            }
        };
    }
    return out;
}

inline Tensor mul_rowvec(Graph& g, const Tensor& a, const Tensor& b) {
    if (b.rows() != 1 || b.cols() != a.cols())
        throw DimensionError("mul_rowvec: " + shape_str(a) + " * " + shape_str(b));
    const std::size_t n = a.rows(), p = a.cols();
    Tensor out = g.record(n, p, a.requires_grad() || b.requires_grad());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j)
            out.data()[i * p + j] = a.data()[i * p + j] * b.data()[j];
    if (out.requires_grad()) {
        auto an = a.node(), bn = b.node(), on = out.node();
        out.node()->backprop = [an, bn, on, n, p] {
            if (an->requires_grad) {
                an->ensure_grad();
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < p; ++j)
                        an->grad[i * p + j] += bn->value[j] * on->grad[i * p + j];
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < p; ++j)
                        bn->grad[j] += an->value[i * p + j] * on->grad[i * p + j];
            }
        };
    }
    return out;
}

inline Tensor sum(Graph& g, const Tensor& a) {
    Tensor out = g.record(1, 1, a.requires_grad());
    double acc = 0.0;
    for (double v : a.data()) acc += v;
    out.data()[0] = acc;
    if (out.requires_grad()) {
        auto an = a.node(), on = out.node();
        out.node()->backprop = [an, on] {
            an->ensure_grad();
            for (auto& gv : an->grad) gv += on->grad[0];
        };
    }
    return out;
}

inline Tensor mean_all(Graph& g, const Tensor& a) {
    return scale(g, sum(g, a), 1.0 / static_cast<double>(a.size()));
}

// Numerically stabilized row-wise softmax.
inline Tensor softmax_rows(Graph& g, const Tensor& a) {
    const std::size_t n = a.rows(), p = a.cols();
    Tensor out = g.record(n, p, a.requires_grad());
    for (std::size_t i = 0; i < n; ++i) {
        double mx = a.data()[i * p];
        for (std::size_t j = 1; j < p; ++j) mx = std::max(mx, a.data()[i * p + j]);
        double z = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            const double e = std::exp(a.data()[i * p + j] - mx);
            out.data()[i * p + j] = e;
            z += e;
        }
        for (std::size_t j = 0; j < p; ++j) out.data()[i * p + j] /= z;
    }
    if (out.requires_grad()) {
        auto an = a.node(), on = out.node();
        out.node()->backprop = [an, on, n, p] {
            an->ensure_grad();
            for (std::size_t i = 0; i < n; ++i) {
                double dot = 0.0;
                for (std::size_t j = 0; j < p; ++j)
                    dot += on->grad[i * p + j] * on->value[i * p + j];
                for (std::size_t j = 0; j < p; ++j)
                    an->grad[i * p + j] +=
                        on->value[i * p + j] * (on->grad[i * p + j] - dot);
            }
        };
    }
    return out;
}

inline Tensor concat_cols(Graph& g, const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ContractError("concat_cols: empty input");
    const std::size_t n = parts[0].rows();
    std::size_t total = 0;
    bool rg = false;
    for (const auto& t : parts) {
        if (t.rows() != n) throw DimensionError("concat_cols: row counts differ");
        total += t.cols();
        rg = rg || t.requires_grad();
    }
    Tensor out = g.record(n, total, rg);
    std::size_t off = 0;
    for (const auto& t : parts) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < t.cols(); ++j)
                out.data()[i * total + off + j] = t.data()[i * t.cols() + j];
        off += t.cols();
    }
    if (rg) {
        std::vector<std::shared_ptr<Node>> pn;
        for (const auto& t : parts) pn.push_back(t.node());
        auto on = out.node();
        out.node()->backprop = [pn, on, n, total] {
            std::size_t off2 = 0;
            for (const auto& p : pn) {
                if (p->requires_grad) {
                    p->ensure_grad();
                    for (std::size_t i = 0; i < n; ++i)
                        for (std::size_t j = 0; j < p->cols; ++j)
                            p->grad[i * p->cols + j] += on->grad[i * total + off2 + j];
                }
                off2 += p->cols;
            }
        };
    }
    return out;
}

inline Tensor concat_rows(Graph& g, const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ContractError("concat_rows: empty input");
    const std::size_t p = parts[0].cols();
    std::size_t total = 0;
    bool rg = false;
    for (const auto& t : parts) {
        if (t.cols() != p) throw DimensionError("concat_rows: column counts differ");
        total += t.rows();
        rg = rg || t.requires_grad();
    }
    Tensor out = g.record(total, p, rg);
    std::size_t off = 0;
    for (const auto& t : parts) {
        for (std::size_t i = 0; i < t.size(); ++i) out.data()[off * p + i] = t.data()[i];
        off += t.rows();
    }
    if (rg) {
        std::vector<std::shared_ptr<Node>> pn;
        for (const auto& t : parts) pn.push_back(t.node());
        auto on = out.node();
        out.node()->backprop = [pn, on, p] {
            std::size_t off2 = 0;
            for (const auto& q : pn) {
                if (q->requires_grad) {
                    q->ensure_grad();
                    for (std::size_t i = 0; i < q->value.size(); ++i)
                        q->grad[i] += on->grad[off2 * p + i];
                }
                off2 += q->rows;
            }
        };
    }
    return out;
}

inline Tensor slice_cols(Graph& g, const Tensor& a, std::size_t c0, std::size_t c1) {
    if (c1 <= c0 || c1 > a.cols())
        throw DimensionError("slice_cols: [" + std::to_string(c0) + "," + std::to_string(c1) +
                             ") out of " + shape_str(a));
    const std::size_t n = a.rows(), p = a.cols(), w = c1 - c0;
    Tensor out = g.record(n, w, a.requires_grad());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < w; ++j) out.data()[i * w + j] = a.data()[i * p + c0 + j];
    if (out.requires_grad()) {
        auto an = a.node(), on = out.node();
        out.node()->backprop = [an, on, n, p, w, c0] {
            an->ensure_grad();
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < w; ++j)
                    an->grad[i * p + c0 + j] += on->grad[i * w + j];
        };
    }
    return out;
}

inline Tensor slice_rows(Graph& g, const Tensor& a, std::size_t r0, std::size_t r1) {
    if (r1 <= r0 || r1 > a.rows())
        throw DimensionError("slice_rows: [" + std::to_string(r0) + "," + std::to_string(r1) +
                             ") out of " + shape_str(a));
    const std::size_t p = a.cols(), h = r1 - r0;
    Tensor out = g.record(h, p, a.requires_grad());
    for (std::size_t i = 0; i < h * p; ++i) out.data()[i] = a.data()[r0 * p + i];
    if (out.requires_grad()) {
        auto an = a.node(), on = out.node();
        out.node()->backprop = [an, on, p, h, r0] {
            an->ensure_grad();
            for (std::size_t i = 0; i < h * p; ++i) an->grad[r0 * p + i] += on->grad[i];
        };
    }
    return out;
}

// Normalize each column over its rows to mean 0, variance 1 (population
// convention, stabilized by eps inside the sqrt). Backbone of batch and
// instance normalization.
inline Tensor normalize_cols(Graph& g, const Tensor& a, double eps = 1e-5) {
    const std::size_t n = a.rows(), p = a.cols();
    Tensor out = g.record(n, p, a.requires_grad());
    std::vector<double> inv_std(p);
    for (std::size_t j = 0; j < p; ++j) {
        double mu = 0.0;
        for (std::size_t i = 0; i < n; ++i) mu += a.data()[i * p + j];
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = a.data()[i * p + j] - mu;
            var += d * d;
        }
        var /= static_cast<double>(n);
        const double is = 1.0 / std::sqrt(var + eps);
        inv_std[j] = is;
        for (std::size_t i = 0; i < n; ++i)
            out.data()[i * p + j] = (a.data()[i * p + j] - mu) * is;
    }
    if (out.requires_grad()) {
        auto an = a.node(), on = out.node();
        out.node()->backprop = [an, on, n, p, inv_std] {
            an->ensure_grad();
            for (std::size_t j = 0; j < p; ++j) {
                double mean_dy = 0.0, mean_dyy = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    mean_dy += on->grad[i * p + j];
                    mean_dyy += on->grad[i * p + j] * on->value[i * p + j];
                }
                mean_dy /= static_cast<double>(n);
                mean_dyy /= static_cast<double>(n);
                for (std::size_t i = 0; i < n; ++i)
                    an->grad[i * p + j] += inv_std[j] * (on->grad[i * p + j] - mean_dy -
                                                         on->value[i * p + j] * mean_dyy);
            }
        };
    }
    return out;
}

// Row-wise counterpart (layer normalization over the feature axis).
inline Tensor normalize_rows(Graph& g, const Tensor& a, double eps = 1e-5) {
    const std::size_t n = a.rows(), p = a.cols();
    Tensor out = g.record(n, p, a.requires_grad());
    std::vector<double> inv_std(n);
    for (std::size_t i = 0; i < n; ++i) {
        double mu = 0.0;
        for (std::size_t j = 0; j < p; ++j) mu += a.data()[i * p + j];
        mu /= static_cast<double>(p);
        double var = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            const double d = a.data()[i * p + j] - mu;
            var += d * d;
        }
        var /= static_cast<double>(p);
        const double is = 1.0 / std::sqrt(var + eps);
        inv_std[i] = is;
        for (std::size_t j = 0; j < p; ++j)
            out.data()[i * p + j] = (a.data()[i * p + j] - mu) * is;
    }
    if (out.requires_grad()) {
        auto an = a.node(), on = out.node();
        out.node()->backprop = [an, on, n, p, inv_std] {
            an->ensure_grad();
            for (std::size_t i = 0; i < n; ++i) {
                double mean_dy = 0.0, mean_dyy = 0.0;
                for (std::size_t j = 0; j < p; ++j) {
                    mean_dy += on->grad[i * p + j];
                    mean_dyy += on->grad[i * p + j] * on->value[i * p + j];
                }
                mean_dy /= static_cast<double>(p);
                mean_dyy /= static_cast<double>(p);
                for (std::size_t j = 0; j < p; ++j)
                    an->grad[i * p + j] += inv_std[i] * (on->grad[i * p + j] - mean_dy -
                                                         on->value[i * p + j] * mean_dyy);
            }
        };
    }
    return out;
}

// Inverted dropout recorded on the tape; identity when training == false.
// The mask is drawn from the caller's RNG so runs replay from a seed.
inline Tensor dropout(Graph& g, const Tensor& a, double rate, Rng& rng, bool training) {
    if (!training || rate <= 0.0) return a;
    if (rate >= 1.0) throw ContractError("dropout: rate must be < 1");
    const double keep = 1.0 - rate;
    auto mask = std::make_shared<std::vector<double>>(a.size());
    for (auto& m : *mask) m = rng.bernoulli(rate) ? 0.0 : 1.0 / keep;
    Tensor out = g.record(a.rows(), a.cols(), a.requires_grad());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * (*mask)[i];
    if (out.requires_grad()) {
        auto an = a.node(), on = out.node();
        out.node()->backprop = [an, on, mask] {
            an->ensure_grad();
            for (std::size_t i = 0; i < on->value.size(); ++i)
                an->grad[i] += (*mask)[i] * on->grad[i];
        };
    }
    return out;
}

// Sum of squared entries of (a - b); the workhorse of every reconstruction loss.
inline Tensor squared_error(Graph& g, const Tensor& a, const Tensor& b) {
    Tensor d = sub(g, a, b);
    return sum(g, mul(g, d, d));
}

inline bool all_finite(const Tensor& t) {
    for (double v : t.data())
        if (!std::isfinite(v)) return false;
    return true;
}

} // namespace tsnas

#endif
