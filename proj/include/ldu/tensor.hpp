#pragma once
// Reverse-mode automatic differentiation over dense row-major tensors of
// 64-bit floats. Every operation that touches a gradient-requiring tensor
// records a graph node; backward() walks the recorded graph once in reverse
// topological order. Gradients on leaves accumulate additively across calls;
// callers zero them between optimizer steps. Tensors whose inputs do not
// require gradients are computed without recording anything.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace ldu {

using Shape = std::vector<std::size_t>;

namespace detail {

inline std::size_t shape_size(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << ']';
    return os.str();
}

[[noreturn]] inline void fail(const std::string& op, const std::string& msg) {
    throw std::runtime_error(op + ": " + msg);
}

struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // allocated only when requires_grad
    bool requires_grad{false};
    const char* op{"leaf"};
    std::vector<std::shared_ptr<Node>> inputs;
    std::function<void(Node&)> backprop;  // scatters this node's grad into inputs

    bool leaf() const { return inputs.empty(); }
};

using NodePtr = std::shared_ptr<Node>;

}  // namespace detail

class Tensor {
  public:
    Tensor() = default;

    static Tensor leaf(Shape shape, std::vector<double> values, bool requires_grad) {
        if (detail::shape_size(shape) != values.size())
            detail::fail("Tensor", "shape " + detail::shape_str(shape) + " does not match " +
                                       std::to_string(values.size()) + " values");
        if (values.empty()) detail::fail("Tensor", "empty tensors are not supported");
        auto n = std::make_shared<detail::Node>();
        n->shape = std::move(shape);
        n->value = std::move(values);
        n->requires_grad = requires_grad;
        if (requires_grad) n->grad.assign(n->value.size(), 0.0);
        return Tensor(std::move(n));
    }

    static Tensor constant(Shape shape, std::vector<double> values) {
        return leaf(std::move(shape), std::move(values), false);
    }

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        std::vector<double> v(detail::shape_size(shape), 0.0);
        return leaf(std::move(shape), std::move(v), requires_grad);
    }

    static Tensor full(Shape shape, double value) {
        std::vector<double> v(detail::shape_size(shape), value);
        return leaf(std::move(shape), std::move(v), false);
    }

    static Tensor scalar(double value, bool requires_grad = false) {
        return leaf({1}, {value}, requires_grad);
    }

    bool valid() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t size() const { return node_->value.size(); }
    std::size_t rank() const { return node_->shape.size(); }

    std::size_t rows() const {
        require_rank2("rows");
        return node_->shape[0];
    }
    std::size_t cols() const {
        require_rank2("cols");
        return node_->shape[1];
    }

    std::span<const double> values() const { return node_->value; }
    double value(std::size_t i) const { return node_->value[i]; }
    double value(std::size_t r, std::size_t c) const {
        require_rank2("value(r,c)");
        return node_->value[r * node_->shape[1] + c];
    }

    // scalar extraction
    double item() const {
        if (size() != 1) detail::fail("item", "tensor has shape " + detail::shape_str(shape()));
        return node_->value[0];
    }

    bool requires_grad() const { return node_->requires_grad; }

    std::span<const double> grad() const {
        if (!node_->requires_grad) detail::fail("grad", "tensor does not require gradients");
        return node_->grad;
    }

    void zero_grad() {
        if (node_->requires_grad) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
    }

    // In-place value mutation; meant for leaves (parameter updates, finite
    // differences). Mutating an interior node of a live graph is undefined.
    std::vector<double>& mutable_values() { return node_->value; }
    std::vector<double>& mutable_grad() { return node_->grad; }

    const detail::NodePtr& node() const { return node_; }

  private:
    explicit Tensor(detail::NodePtr n) : node_(std::move(n)) {}

    void require_rank2(const char* what) const {
        if (node_->shape.size() != 2)
            detail::fail(what, "expected rank-2 tensor, got " + detail::shape_str(node_->shape));
    }

    friend Tensor make_node(const char* op, Shape shape, std::vector<double> value,
                            std::vector<detail::NodePtr> inputs,
                            std::function<void(detail::Node&)> backprop);

    detail::NodePtr node_;
};

inline Tensor make_node(const char* op, Shape shape, std::vector<double> value,
                        std::vector<detail::NodePtr> inputs,
                        std::function<void(detail::Node&)> backprop) {
    auto n = std::make_shared<detail::Node>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    n->op = op;
    bool needs_grad = false;
    for (const auto& in : inputs) needs_grad = needs_grad || in->requires_grad;
    n->requires_grad = needs_grad;
    if (needs_grad) {
        n->grad.assign(n->value.size(), 0.0);
        n->inputs = std::move(inputs);
        n->backprop = std::move(backprop);
    }
    return Tensor(std::move(n));
}

namespace detail {

enum class Bcast { kSame, kScalar, kRow, kCol };

// Broadcasting for binary elementwise ops: the second operand may be a
// single element, a 1xN row matched against the columns of A, or an Mx1
// column matched against the rows of A. The first operand is never broadcast.
inline Bcast resolve_bcast(const Shape& a, const Shape& b, const char* op) {
    if (a == b) return Bcast::kSame;
    if (shape_size(b) == 1) return Bcast::kScalar;
    if (a.size() == 2 && b.size() == 2) {
        if (b[0] == 1 && b[1] == a[1]) return Bcast::kRow;
        if (b[1] == 1 && b[0] == a[0]) return Bcast::kCol;
    }
    fail(op, "incompatible shapes " + shape_str(a) + " vs " + shape_str(b));
}

inline std::size_t bcast_index(Bcast mode, std::size_t i, std::size_t cols) {
    switch (mode) {
        case Bcast::kSame: return i;
        case Bcast::kScalar: return 0;
        case Bcast::kRow: return i % cols;
        case Bcast::kCol: return i / cols;
    }
    return 0;
}

inline void ensure_finite(std::span<const double> v, const char* op) {
    for (double x : v)
        if (!std::isfinite(x)) fail(op, "produced a non-finite value");
}

template <typename F, typename DFA, typename DFB>
Tensor binary_elementwise(const char* op, const Tensor& a, const Tensor& b, F f, DFA dfa, DFB dfb,
                          bool check_finite = false) {
    const auto& an = a.node();
    const auto& bn = b.node();
    const Bcast mode = resolve_bcast(an->shape, bn->shape, op);
    const std::size_t n = an->value.size();
    const std::size_t cols = an->shape.size() == 2 ? an->shape[1] : n;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = f(an->value[i], bn->value[bcast_index(mode, i, cols)]);
    if (check_finite) ensure_finite(out, op);
    return make_node(op, an->shape, std::move(out), {an, bn}, [mode, cols, dfa, dfb](Node& o) {
        Node& A = *o.inputs[0];
        Node& B = *o.inputs[1];
        const std::size_t n = o.value.size();
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t bi = bcast_index(mode, i, cols);
            const double g = o.grad[i];
            if (A.requires_grad) A.grad[i] += dfa(A.value[i], B.value[bi]) * g;
            if (B.requires_grad) B.grad[bi] += dfb(A.value[i], B.value[bi]) * g;
        }
    });
}

template <typename F, typename DF>
Tensor unary_elementwise(const char* op, const Tensor& a, F f, DF df, bool check_finite = false) {
    const auto& an = a.node();
    const std::size_t n = an->value.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = f(an->value[i]);
    if (check_finite) ensure_finite(out, op);
    return make_node(op, an->shape, std::move(out), {an}, [df](Node& o) {
        Node& A = *o.inputs[0];
        for (std::size_t i = 0; i < o.value.size(); ++i)
            A.grad[i] += df(A.value[i], o.value[i]) * o.grad[i];
    });
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise and broadcast arithmetic

inline Tensor add(const Tensor& a, const Tensor& b) {
    return detail::binary_elementwise(
        "add", a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
        [](double, double) { return 1.0; });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    return detail::binary_elementwise(
        "sub", a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
        [](double, double) { return -1.0; });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    return detail::binary_elementwise(
        "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
        [](double x, double) { return x; });
}

inline Tensor div(const Tensor& a, const Tensor& b) {
    return detail::binary_elementwise(
        "div", a, b, [](double x, double y) { return x / y; },
        [](double, double y) { return 1.0 / y; },
        [](double x, double y) { return -x / (y * y); },
        /*check_finite=*/true);
}

inline Tensor scalar_mul(const Tensor& a, double c) {
    return detail::unary_elementwise(
        "scalar_mul", a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

inline Tensor neg(const Tensor& a) {
    return detail::unary_elementwise(
        "neg", a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

inline Tensor relu(const Tensor& a) {
    return detail::unary_elementwise(
        "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

inline Tensor exp(const Tensor& a) {
    return detail::unary_elementwise(
        "exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

inline Tensor log(const Tensor& a) {
    return detail::unary_elementwise(
        "log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; },
        /*check_finite=*/true);
}

inline Tensor sigmoid(const Tensor& a) {
    return detail::unary_elementwise(
        "sigmoid", a,
        [](double x) {
            if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
            const double e = std::exp(x);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

// clamp to [lo, hi]; the gradient passes through strictly inside the interval
// and is zero elsewhere (subgradient choice at the boundary).
inline Tensor clamp(const Tensor& a, double lo, double hi) {
    return detail::unary_elementwise(
        "clamp", a, [lo, hi](double x) { return std::min(std::max(x, lo), hi); },
        [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

inline Tensor clamp_min(const Tensor& a, double lo) {
    return clamp(a, lo, std::numeric_limits<double>::infinity());
}

// ---------------------------------------------------------------------------
// reductions

inline Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (double x : a.values()) s += x;
    return make_node("sum", {1}, {s}, {a.node()}, [](detail::Node& o) {
        detail::Node& A = *o.inputs[0];
        for (double& g : A.grad) g += o.grad[0];
    });
}

inline Tensor mean(const Tensor& a) {
    double s = 0.0;
    for (double x : a.values()) s += x;
    const double inv = 1.0 / static_cast<double>(a.size());
    return make_node("mean", {1}, {s * inv}, {a.node()}, [inv](detail::Node& o) {
        detail::Node& A = *o.inputs[0];
        for (double& g : A.grad) g += o.grad[0] * inv;
    });
}

// ---------------------------------------------------------------------------
// linear algebra

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2)
        detail::fail("matmul", "expected rank-2 tensors, got " + detail::shape_str(a.shape()) +
                                   " and " + detail::shape_str(b.shape()));
    const std::size_t r = a.rows(), k = a.cols(), c = b.cols();
    if (b.rows() != k)
        detail::fail("matmul", "inner dimensions differ: " + detail::shape_str(a.shape()) +
                                   " vs " + detail::shape_str(b.shape()));
    std::vector<double> out(r * c, 0.0);
    const auto av = a.values();
    const auto bv = b.values();
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t t = 0; t < k; ++t) {
            const double x = av[i * k + t];
            for (std::size_t j = 0; j < c; ++j) out[i * c + j] += x * bv[t * c + j];
        }
    return make_node("matmul", {r, c}, std::move(out), {a.node(), b.node()},
                     [r, k, c](detail::Node& o) {
                         detail::Node& A = *o.inputs[0];
                         detail::Node& B = *o.inputs[1];
                         if (A.requires_grad)
                             for (std::size_t i = 0; i < r; ++i)
                                 for (std::size_t j = 0; j < c; ++j) {
                                     const double g = o.grad[i * c + j];
                                     for (std::size_t t = 0; t < k; ++t)
                                         A.grad[i * k + t] += g * B.value[t * c + j];
                                 }
                         if (B.requires_grad)
                             for (std::size_t i = 0; i < r; ++i)
                                 for (std::size_t t = 0; t < k; ++t) {
                                     const double x = A.value[i * k + t];
                                     for (std::size_t j = 0; j < c; ++j)
                                         B.grad[t * c + j] += x * o.grad[i * c + j];
                                 }
                     });
}

inline Tensor transpose(const Tensor& a) {
    if (a.rank() != 2)
        detail::fail("transpose", "expected rank-2 tensor, got " + detail::shape_str(a.shape()));
    const std::size_t r = a.rows(), c = a.cols();
    std::vector<double> out(r * c);
    const auto av = a.values();
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[j * r + i] = av[i * c + j];
    return make_node("transpose", {c, r}, std::move(out), {a.node()}, [r, c](detail::Node& o) {
        detail::Node& A = *o.inputs[0];
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) A.grad[i * c + j] += o.grad[j * r + i];
    });
}

// ---------------------------------------------------------------------------
// row-wise operations (rank-2 inputs)

inline Tensor l2_norm_rows(const Tensor& a) {
    if (a.rank() != 2)
        detail::fail("l2_norm_rows",
                     "expected rank-2 tensor, got " + detail::shape_str(a.shape()));
    const std::size_t r = a.rows(), c = a.cols();
    std::vector<double> out(r);
    const auto av = a.values();
    for (std::size_t i = 0; i < r; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += av[i * c + j] * av[i * c + j];
        out[i] = std::sqrt(s);
    }
    return make_node("l2_norm_rows", {r, 1}, std::move(out), {a.node()},
                     [r, c](detail::Node& o) {
                         detail::Node& A = *o.inputs[0];
                         for (std::size_t i = 0; i < r; ++i) {
                             const double norm = o.value[i];
                             if (norm < 1e-300) continue;  // subgradient 0 at the origin
                             const double g = o.grad[i] / norm;
                             for (std::size_t j = 0; j < c; ++j)
                                 A.grad[i * c + j] += g * A.value[i * c + j];
                         }
                     });
}

inline Tensor softmax_rows(const Tensor& a) {
    if (a.rank() != 2)
        detail::fail("softmax_rows",
                     "expected rank-2 tensor, got " + detail::shape_str(a.shape()));
    const std::size_t r = a.rows(), c = a.cols();
    std::vector<double> out(r * c);
    const auto av = a.values();
    for (std::size_t i = 0; i < r; ++i) {
        double mx = av[i * c];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, av[i * c + j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            out[i * c + j] = std::exp(av[i * c + j] - mx);
            denom += out[i * c + j];
        }
        for (std::size_t j = 0; j < c; ++j) out[i * c + j] /= denom;
    }
    return make_node("softmax_rows", {r, c}, std::move(out), {a.node()},
                     [r, c](detail::Node& o) {
                         detail::Node& A = *o.inputs[0];
                         for (std::size_t i = 0; i < r; ++i) {
                             double dot = 0.0;
                             for (std::size_t j = 0; j < c; ++j)
                                 dot += o.grad[i * c + j] * o.value[i * c + j];
                             for (std::size_t j = 0; j < c; ++j)
                                 A.grad[i * c + j] +=
                                     o.value[i * c + j] * (o.grad[i * c + j] - dot);
                         }
                     });
}

inline Tensor log_softmax_rows(const Tensor& a) {
    if (a.rank() != 2)
        detail::fail("log_softmax_rows",
                     "expected rank-2 tensor, got " + detail::shape_str(a.shape()));
    const std::size_t r = a.rows(), c = a.cols();
    std::vector<double> out(r * c);
    const auto av = a.values();
    for (std::size_t i = 0; i < r; ++i) {
        double mx = av[i * c];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, av[i * c + j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < c; ++j) denom += std::exp(av[i * c + j] - mx);
        const double lse = mx + std::log(denom);
        for (std::size_t j = 0; j < c; ++j) out[i * c + j] = av[i * c + j] - lse;
    }
    return make_node("log_softmax_rows", {r, c}, std::move(out), {a.node()},
                     [r, c](detail::Node& o) {
                         detail::Node& A = *o.inputs[0];
                         for (std::size_t i = 0; i < r; ++i) {
                             double gsum = 0.0;
                             for (std::size_t j = 0; j < c; ++j) gsum += o.grad[i * c + j];
                             for (std::size_t j = 0; j < c; ++j)
                                 A.grad[i * c + j] +=
                                     o.grad[i * c + j] - std::exp(o.value[i * c + j]) * gsum;
                         }
                     });
}

// out[r] = a[r, index[r]] as a bx1 column; used to pick per-sample entries
// (e.g. the log-probability of the true class).
inline Tensor gather_rows(const Tensor& a, const std::vector<std::size_t>& index) {
    if (a.rank() != 2)
        detail::fail("gather_rows",
                     "expected rank-2 tensor, got " + detail::shape_str(a.shape()));
    const std::size_t r = a.rows(), c = a.cols();
    if (index.size() != r)
        detail::fail("gather_rows", "index count " + std::to_string(index.size()) +
                                        " does not match row count " + std::to_string(r));
    std::vector<double> out(r);
    for (std::size_t i = 0; i < r; ++i) {
        if (index[i] >= c)
            detail::fail("gather_rows", "index " + std::to_string(index[i]) +
                                            " out of range for " + std::to_string(c) +
                                            " columns (row " + std::to_string(i) + ")");
        out[i] = a.values()[i * c + index[i]];
    }
    return make_node("gather_rows", {r, 1}, std::move(out), {a.node()},
                     [index, c](detail::Node& o) {
                         detail::Node& A = *o.inputs[0];
                         for (std::size_t i = 0; i < index.size(); ++i)
                             A.grad[i * c + index[i]] += o.grad[i];
                     });
}

// ---------------------------------------------------------------------------
// distance kernels

// out[r][i] = -||z_r - p_i||_2 for z (bxn) against p (mxn). Coincident points
// get subgradient 0.
inline Tensor neg_pairwise_l2(const Tensor& z, const Tensor& p) {
    if (z.rank() != 2 || p.rank() != 2 || z.cols() != p.cols())
        detail::fail("neg_pairwise_l2", "dimension mismatch: " + detail::shape_str(z.shape()) +
                                            " vs " + detail::shape_str(p.shape()));
    const std::size_t b = z.rows(), n = z.cols(), m = p.rows();
    std::vector<double> out(b * m);
    const auto zv = z.values();
    const auto pv = p.values();
    for (std::size_t r = 0; r < b; ++r)
        for (std::size_t i = 0; i < m; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double d = zv[r * n + j] - pv[i * n + j];
                s += d * d;
            }
            out[r * m + i] = -std::sqrt(s);
        }
    return make_node("neg_pairwise_l2", {b, m}, std::move(out), {z.node(), p.node()},
                     [b, n, m](detail::Node& o) {
                         detail::Node& Z = *o.inputs[0];
                         detail::Node& P = *o.inputs[1];
                         for (std::size_t r = 0; r < b; ++r)
                             for (std::size_t i = 0; i < m; ++i) {
                                 const double dist = -o.value[r * m + i];
                                 if (dist < 1e-300) continue;
                                 const double g = o.grad[r * m + i] / dist;
                                 for (std::size_t j = 0; j < n; ++j) {
                                     const double diff = Z.value[r * n + j] - P.value[i * n + j];
                                     if (Z.requires_grad) Z.grad[r * n + j] -= g * diff;
                                     if (P.requires_grad) P.grad[i * n + j] += g * diff;
                                 }
                             }
                     });
}

// Scalar sum over unordered row pairs of ||p_i - p_j||_2.
inline Tensor pairwise_dist_sum(const Tensor& p) {
    if (p.rank() != 2)
        detail::fail("pairwise_dist_sum",
                     "expected rank-2 tensor, got " + detail::shape_str(p.shape()));
    const std::size_t m = p.rows(), n = p.cols();
    const auto pv = p.values();
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                const double d = pv[i * n + k] - pv[j * n + k];
                s += d * d;
            }
            total += std::sqrt(s);
        }
    return make_node("pairwise_dist_sum", {1}, {total}, {p.node()}, [m, n](detail::Node& o) {
        detail::Node& P = *o.inputs[0];
        const double g = o.grad[0];
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double d = P.value[i * n + k] - P.value[j * n + k];
                    s += d * d;
                }
                const double dist = std::sqrt(s);
                if (dist < 1e-300) continue;
                for (std::size_t k = 0; k < n; ++k) {
                    const double d = (P.value[i * n + k] - P.value[j * n + k]) / dist;
                    P.grad[i * n + k] += g * d;
                    P.grad[j * n + k] -= g * d;
                }
            }
    });
}

// ---------------------------------------------------------------------------
// generic dispatch over the core op set

enum class OpKind {
    kMatmul,
    kAdd,
    kSub,
    kScalarMul,
    kRelu,
    kExp,
    kNeg,
    kLog,
    kSum,
    kMean,
    kL2NormRows,
    kSoftmaxRows,
    kSigmoid,
};

inline Tensor apply_op(OpKind kind, const std::vector<Tensor>& inputs) {
    auto want = [&](std::size_t n, const char* op) {
        if (inputs.size() != n)
            detail::fail(op, "expected " + std::to_string(n) + " inputs, got " +
                                 std::to_string(inputs.size()));
    };
    switch (kind) {
        case OpKind::kMatmul: want(2, "matmul"); return matmul(inputs[0], inputs[1]);
        case OpKind::kAdd: want(2, "add"); return add(inputs[0], inputs[1]);
        case OpKind::kSub: want(2, "sub"); return sub(inputs[0], inputs[1]);
        case OpKind::kScalarMul: {
            want(2, "scalar_mul");
            if (inputs[1].size() != 1)
                detail::fail("scalar_mul", "second input must hold a single value");
            return mul(inputs[0], inputs[1]);
        }
        case OpKind::kRelu: want(1, "relu"); return relu(inputs[0]);
        case OpKind::kExp: want(1, "exp"); return exp(inputs[0]);
        case OpKind::kNeg: want(1, "neg"); return neg(inputs[0]);
        case OpKind::kLog: want(1, "log"); return log(inputs[0]);
        case OpKind::kSum: want(1, "sum"); return sum(inputs[0]);
        case OpKind::kMean: want(1, "mean"); return mean(inputs[0]);
        case OpKind::kL2NormRows: want(1, "l2_norm_rows"); return l2_norm_rows(inputs[0]);
        case OpKind::kSoftmaxRows: want(1, "softmax_rows"); return softmax_rows(inputs[0]);
        case OpKind::kSigmoid: want(1, "sigmoid"); return sigmoid(inputs[0]);
    }
    detail::fail("apply_op", "unknown op kind");
}

// ---------------------------------------------------------------------------
// backward pass

// Accumulates d(loss)/d(t) into the grad buffer of every reachable tensor
// that requires gradients. Leaf gradients persist and add up across calls;
// interior gradients are scratch and reset on every call.
inline void backward(const Tensor& loss) {
    if (!loss.valid()) detail::fail("backward", "invalid tensor");
    if (loss.size() != 1)
        detail::fail("backward",
                     "loss must be a scalar, got shape " + detail::shape_str(loss.shape()));
    detail::Node* root = loss.node().get();
    if (!root->requires_grad) return;

    std::vector<detail::Node*> order;
    std::unordered_set<detail::Node*> visited{root};
    std::vector<std::pair<detail::Node*, std::size_t>> stack{{root, 0}};
    while (!stack.empty()) {
        auto& top = stack.back();
        if (top.second == top.first->inputs.size()) {
            order.push_back(top.first);
            stack.pop_back();
            continue;
        }
        detail::Node* child = top.first->inputs[top.second++].get();
        if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    }

    for (detail::Node* n : order)
        if (!n->leaf()) std::fill(n->grad.begin(), n->grad.end(), 0.0);
    root->grad[0] += 1.0;

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::Node* n = *it;
        for (double g : n->grad)
            if (!std::isfinite(g))
                detail::fail("backward",
                             std::string("non-finite gradient at op '") + n->op + "'");
        if (n->backprop) n->backprop(*n);
    }
}

// ---------------------------------------------------------------------------
// gradient checking

// Compares the autodiff gradient of scalar_fn against central finite
// differences for every entry of every parameter; returns the maximum of
// |autodiff - central| / max(1, |central|). Clobbers parameter gradients.
inline double grad_check(const std::function<Tensor()>& scalar_fn, std::span<Tensor> params,
                         double step) {
    if (step <= 0.0) detail::fail("grad_check", "step must be positive");
    for (auto& p : params) p.zero_grad();

    auto eval = [&]() {
        Tensor out = scalar_fn();
        const double v = out.item();
        if (!std::isfinite(v)) detail::fail("grad_check", "non-finite function value");
        return std::make_pair(out, v);
    };

    auto [loss, base] = eval();
    backward(loss);
    std::vector<std::vector<double>> autodiff;
    autodiff.reserve(params.size());
    for (auto& p : params) {
        auto g = p.grad();
        autodiff.emplace_back(g.begin(), g.end());
    }

    double max_err = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& values = params[pi].mutable_values();
        for (std::size_t k = 0; k < values.size(); ++k) {
            const double saved = values[k];
            values[k] = saved + step;
            const double fp = eval().second;
            values[k] = saved - step;
            const double fm = eval().second;
            values[k] = saved;
            const double fd = (fp - fm) / (2.0 * step);
            const double err = std::abs(autodiff[pi][k] - fd) / std::max(1.0, std::abs(fd));
            max_err = std::max(max_err, err);
        }
    }
    return max_err;
}

}  // namespace ldu
