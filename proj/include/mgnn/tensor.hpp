#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mgnn/matrix.hpp"
#include "mgnn/sparse.hpp"

namespace mgnn {

class Tape;

/// Handle to a node on a tape. Cheap to copy; the tape owns the storage.
class Tensor {
public:
    Tensor() = default;
    Tensor(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    std::size_t id() const { return id_; }
    Tape* tape() const { return tape_; }
    std::size_t rows() const;
    std::size_t cols() const;
    double at(std::size_t i, std::size_t j) const;
    double scalar() const;
    Matrix to_matrix() const;

private:
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Append-only record of a forward computation; creation order is the
/// topological order that backward() walks in reverse, exactly once per node.
class Tape {
public:
    struct Node {
        std::size_t rows = 0, cols = 0;
        std::vector<double> val;
        std::vector<double> grad;
        bool requires_grad = false;
        std::function<void(Tape&)> backward;
        const char* op = "";                // introspection only
        std::vector<std::size_t> parents;   // introspection only
    };

    std::size_t size() const { return nodes_.size(); }
    Node& node(std::size_t id) { return nodes_[id]; }
    const Node& node(std::size_t id) const { return nodes_[id]; }

    Tensor leaf(const Matrix& m, bool requires_grad = false) {
        Node n;
        n.rows = m.rows;
        n.cols = m.cols;
        n.val = m.data;
        n.requires_grad = requires_grad;
        return push(std::move(n));
    }

    Tensor constant(const Matrix& m) { return leaf(m, false); }

    Tensor make(std::size_t rows, std::size_t cols, bool requires_grad,
                std::function<void(Tape&)> backward) {
        Node n;
        n.rows = rows;
        n.cols = cols;
        n.val.assign(rows * cols, 0.0);
        n.requires_grad = requires_grad;
        n.backward = std::move(backward);
        return push(std::move(n));
    }

    /// Accumulated chain-rule gradients for every node reachable from loss;
    /// unreached differentiable nodes end with zero gradients.
    void backward(const Tensor& loss) {
        if (loss.tape() != this) throw std::invalid_argument("backward: tensor from another tape");
        const Node& l = nodes_[loss.id()];
        if (l.rows != 1 || l.cols != 1)
            throw std::invalid_argument("backward: loss must be a 1x1 scalar");
        for (Node& n : nodes_) n.grad.assign(n.val.size(), 0.0);
        nodes_[loss.id()].grad[0] = 1.0;
        for (std::size_t id = loss.id() + 1; id-- > 0;) {
            Node& n = nodes_[id];
            if (n.backward && n.requires_grad) n.backward(*this);
        }
    }

    Matrix grad_of(const Tensor& t) const {
        const Node& n = nodes_[t.id()];
        Matrix g(n.rows, n.cols);
        if (!n.grad.empty()) g.data = n.grad;
        return g;
    }

private:
    Tensor push(Node n) {
        nodes_.push_back(std::move(n));
        return Tensor(this, nodes_.size() - 1);
    }

    std::vector<Node> nodes_;
};

inline std::size_t Tensor::rows() const { return tape_->node(id_).rows; }
inline std::size_t Tensor::cols() const { return tape_->node(id_).cols; }
inline double Tensor::at(std::size_t i, std::size_t j) const {
    const auto& n = tape_->node(id_);
    return n.val[i * n.cols + j];
}
inline double Tensor::scalar() const {
    const auto& n = tape_->node(id_);
    if (n.rows != 1 || n.cols != 1) throw std::invalid_argument("scalar() on non-1x1 tensor");
    return n.val[0];
}
inline Matrix Tensor::to_matrix() const {
    const auto& n = tape_->node(id_);
    Matrix m(n.rows, n.cols);
    m.data = n.val;
    return m;
}

namespace ops {

namespace detail {

inline std::string shape_str(const Tensor& t) {
    return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

inline void require_same_tape(const Tensor& a, const Tensor& b) {
    if (a.tape() != b.tape()) throw std::invalid_argument("operands live on different tapes");
}

inline void check_finite(const Tape::Node& n, const char* op) {
    for (double v : n.val)
        if (!std::isfinite(v))
            throw std::runtime_error(std::string(op) + ": non-finite result");
}

} // namespace detail

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    detail::require_same_tape(a, b);
    if (a.cols() != b.rows())
        throw std::invalid_argument("matmul: shape mismatch " + detail::shape_str(a) + " * " +
                                    detail::shape_str(b));
    Tape& tp = *a.tape();
    const std::size_t ia = a.id(), ib = b.id();
    bool rg = tp.node(ia).requires_grad || tp.node(ib).requires_grad;
    Tensor out = tp.make(a.rows(), b.cols(), rg, nullptr);
    const std::size_t io = out.id();
    tp.node(io).backward = [ia, ib, io](Tape& t) {
        Tape::Node& na = t.node(ia);
        Tape::Node& nb = t.node(ib);
        Tape::Node& no = t.node(io);
        const std::size_t m = na.rows, k = na.cols, n = nb.cols;
        if (na.requires_grad)
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    double g = no.grad[i * n + j];
                    if (g == 0.0) continue;
                    for (std::size_t c = 0; c < k; ++c)
                        na.grad[i * k + c] += g * nb.val[c * n + j];
                }
        if (nb.requires_grad)
            for (std::size_t c = 0; c < k; ++c)
                for (std::size_t i = 0; i < m; ++i) {
                    double av = na.val[i * k + c];
                    if (av == 0.0) continue;
                    for (std::size_t j = 0; j < n; ++j)
                        nb.grad[c * n + j] += av * no.grad[i * n + j];
                }
    };
    Tape::Node& no = tp.node(io);
    const Tape::Node& na = tp.node(ia);
    const Tape::Node& nb = tp.node(ib);
    const std::size_t m = na.rows, k = na.cols, n = nb.cols;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t c = 0; c < k; ++c) {
            double av = na.val[i * k + c];
            if (av == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) no.val[i * n + j] += av * nb.val[c * n + j];
        }
    detail::check_finite(no, "matmul");
    return out;
}

/// Sparse-dense product with a constant (non-differentiated) left operand.
/// The Csr must outlive the tape.
inline Tensor spmm(const Csr& s, const Tensor& x) {
    if (s.dim != x.rows())
        throw std::invalid_argument("spmm: sparse dim " + std::to_string(s.dim) +
                                    " vs dense rows " + std::to_string(x.rows()));
    Tape& tp = *x.tape();
    const std::size_t ix = x.id();
    const Csr* sp = &s;
    Tensor out = tp.make(s.dim, x.cols(), tp.node(ix).requires_grad, nullptr);
    const std::size_t io = out.id();
    tp.node(io).backward = [sp, ix, io](Tape& t) {
        Tape::Node& nx = t.node(ix);
        Tape::Node& no = t.node(io);
        if (!nx.requires_grad) return;
        const std::size_t c = no.cols;
        for (std::size_t i = 0; i < sp->dim; ++i)
            for (std::size_t k = sp->row_begin(i); k < sp->row_end(i); ++k) {
                std::size_t j = sp->col[k];
                double v = sp->val[k];
                for (std::size_t cc = 0; cc < c; ++cc)
                    nx.grad[j * c + cc] += v * no.grad[i * c + cc];
            }
    };
    Tape::Node& no = tp.node(io);
    const Tape::Node& nx = tp.node(ix);
    const std::size_t c = nx.cols;
    for (std::size_t i = 0; i < s.dim; ++i)
        for (std::size_t k = s.row_begin(i); k < s.row_end(i); ++k) {
            std::size_t j = s.col[k];
            double v = s.val[k];
            for (std::size_t cc = 0; cc < c; ++cc) no.val[i * c + cc] += v * nx.val[j * c + cc];
        }
    detail::check_finite(no, "spmm");
    return out;
}

/// Per-dimension max aggregation over the sparse row support:
/// out(v,c) = max_{i in row v} s_vi * x(i,c); empty rows give zero rows.
/// The argmax (ties: lowest column index) is recorded for backward.
inline Tensor spmax(const Csr& s, const Tensor& x) {
    if (s.dim != x.rows())
        throw std::invalid_argument("spmax: sparse dim vs dense rows mismatch");
    Tape& tp = *x.tape();
    const std::size_t ix = x.id();
    Tensor out = tp.make(s.dim, x.cols(), tp.node(ix).requires_grad, nullptr);
    const std::size_t io = out.id();
    const std::size_t c = x.cols();
    auto arg = std::make_shared<std::vector<std::size_t>>(s.dim * c, static_cast<std::size_t>(-1));
    auto argval = std::make_shared<std::vector<double>>(s.dim * c, 0.0);
    Tape::Node& no = tp.node(io);
    const Tape::Node& nx = tp.node(ix);
    for (std::size_t v = 0; v < s.dim; ++v) {
        bool first = true;
        for (std::size_t k = s.row_begin(v); k < s.row_end(v); ++k) {
            std::size_t i = s.col[k];
            double w = s.val[k];
            for (std::size_t cc = 0; cc < c; ++cc) {
                double cand = w * nx.val[i * c + cc];
                if (first || cand > no.val[v * c + cc]) {
                    no.val[v * c + cc] = cand;
                    (*arg)[v * c + cc] = i;
                    (*argval)[v * c + cc] = w;
                }
            }
            first = false;
        }
    }
    tp.node(io).backward = [arg, argval, ix, io, c](Tape& t) {
        Tape::Node& nx = t.node(ix);
        Tape::Node& no = t.node(io);
        if (!nx.requires_grad) return;
        for (std::size_t e = 0; e < arg->size(); ++e) {
            std::size_t i = (*arg)[e];
            if (i == static_cast<std::size_t>(-1)) continue;
            nx.grad[i * c + (e % c)] += (*argval)[e] * no.grad[e];
        }
    };
    detail::check_finite(tp.node(io), "spmax");
    return out;
}

namespace detail {

template <typename Fwd, typename Bwd>
Tensor binary_same_shape(const Tensor& a, const Tensor& b, const char* name, Fwd fwd, Bwd bwd) {
    require_same_tape(a, b);
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument(std::string(name) + ": shape mismatch " + shape_str(a) +
                                    " vs " + shape_str(b));
    Tape& tp = *a.tape();
    const std::size_t ia = a.id(), ib = b.id();
    bool rg = tp.node(ia).requires_grad || tp.node(ib).requires_grad;
    Tensor out = tp.make(a.rows(), a.cols(), rg, nullptr);
    const std::size_t io = out.id();
    tp.node(io).op = name;
    tp.node(io).parents = {ia, ib};
    {
        Tape::Node& no = tp.node(io);
        const Tape::Node& na = tp.node(ia);
        const Tape::Node& nb = tp.node(ib);
        for (std::size_t i = 0; i < no.val.size(); ++i) no.val[i] = fwd(na.val[i], nb.val[i]);
        check_finite(no, name);
    }
    tp.node(io).backward = [ia, ib, io, bwd](Tape& t) {
        Tape::Node& na = t.node(ia);
        Tape::Node& nb = t.node(ib);
        Tape::Node& no = t.node(io);
        for (std::size_t i = 0; i < no.grad.size(); ++i) {
            auto [da, db] = bwd(na.val[i], nb.val[i]);
            if (na.requires_grad) na.grad[i] += da * no.grad[i];
            if (nb.requires_grad) nb.grad[i] += db * no.grad[i];
        }
    };
    return out;
}

template <typename Fwd, typename Bwd>
Tensor unary(const Tensor& a, const char* name, Fwd fwd, Bwd bwd) {
    Tape& tp = *a.tape();
    const std::size_t ia = a.id();
    Tensor out = tp.make(a.rows(), a.cols(), tp.node(ia).requires_grad, nullptr);
    const std::size_t io = out.id();
    tp.node(io).op = name;
    tp.node(io).parents = {ia};
    {
        Tape::Node& no = tp.node(io);
        const Tape::Node& na = tp.node(ia);
        for (std::size_t i = 0; i < no.val.size(); ++i) no.val[i] = fwd(na.val[i]);
        check_finite(no, name);
    }
    tp.node(io).backward = [ia, io, bwd](Tape& t) {
        Tape::Node& na = t.node(ia);
        Tape::Node& no = t.node(io);
        if (!na.requires_grad) return;
        for (std::size_t i = 0; i < no.grad.size(); ++i)
            na.grad[i] += bwd(na.val[i], no.val[i]) * no.grad[i];
    };
    return out;
}

} // namespace detail

inline Tensor add(const Tensor& a, const Tensor& b) {
    return detail::binary_same_shape(
        a, b, "add", [](double x, double y) { return x + y; },
        [](double, double) { return std::pair{1.0, 1.0}; });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    return detail::binary_same_shape(
        a, b, "sub", [](double x, double y) { return x - y; },
        [](double, double) { return std::pair{1.0, -1.0}; });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    return detail::binary_same_shape(
        a, b, "mul", [](double x, double y) { return x * y; },
        [](double x, double y) { return std::pair{y, x}; });
}

/// Elementwise max; ties keep the first operand (lowest index when folding).
inline Tensor maximum(const Tensor& a, const Tensor& b) {
    return detail::binary_same_shape(
        a, b, "maximum", [](double x, double y) { return x >= y ? x : y; },
        [](double x, double y) {
            return x >= y ? std::pair{1.0, 0.0} : std::pair{0.0, 1.0};
        });
}

inline Tensor affine(const Tensor& a, double alpha, double beta) {
    return detail::unary(
        a, "affine", [alpha, beta](double x) { return alpha * x + beta; },
        [alpha](double, double) { return alpha; });
}

inline Tensor scale(const Tensor& a, double c) { return affine(a, c, 0.0); }

inline Tensor relu(const Tensor& a) {
    return detail::unary(
        a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

inline Tensor sigmoid(const Tensor& a) {
    return detail::unary(
        a, "sigmoid", [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
        [](double, double y) { return y * (1.0 - y); });
}

inline Tensor tanh_t(const Tensor& a) {
    return detail::unary(
        a, "tanh", [](double x) { return std::tanh(x); },
        [](double, double y) { return 1.0 - y * y; });
}

inline Tensor log_t(const Tensor& a) {
    return detail::unary(
        a, "log", [](double x) { return std::log(x); },
        [](double x, double) { return 1.0 / x; });
}

/// log(1 + e^x), evaluated in the overflow-free form.
inline Tensor softplus(const Tensor& a) {
    return detail::unary(
        a, "softplus",
        [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
        [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

/// Adds a 1 x c bias row to every row of a (the one permitted broadcast).
inline Tensor add_row_broadcast(const Tensor& a, const Tensor& bias) {
    detail::require_same_tape(a, bias);
    if (bias.rows() != 1 || bias.cols() != a.cols())
        throw std::invalid_argument("add_row_broadcast: bias " + detail::shape_str(bias) +
                                    " vs " + detail::shape_str(a));
    Tape& tp = *a.tape();
    const std::size_t ia = a.id(), ib = bias.id();
    bool rg = tp.node(ia).requires_grad || tp.node(ib).requires_grad;
    Tensor out = tp.make(a.rows(), a.cols(), rg, nullptr);
    const std::size_t io = out.id();
    {
        Tape::Node& no = tp.node(io);
        const Tape::Node& na = tp.node(ia);
        const Tape::Node& nb = tp.node(ib);
        for (std::size_t i = 0; i < na.rows; ++i)
            for (std::size_t j = 0; j < na.cols; ++j)
                no.val[i * na.cols + j] = na.val[i * na.cols + j] + nb.val[j];
        detail::check_finite(no, "add_row_broadcast");
    }
    tp.node(io).backward = [ia, ib, io](Tape& t) {
        Tape::Node& na = t.node(ia);
        Tape::Node& nb = t.node(ib);
        Tape::Node& no = t.node(io);
        if (na.requires_grad)
            for (std::size_t i = 0; i < no.grad.size(); ++i) na.grad[i] += no.grad[i];
        if (nb.requires_grad)
            for (std::size_t i = 0; i < no.rows; ++i)
                for (std::size_t j = 0; j < no.cols; ++j) nb.grad[j] += no.grad[i * no.cols + j];
    };
    return out;
}

/// out(i,j) = col(i,0) * a(i,j); col is n x 1 (per-row gate, Eq.-4 style).
inline Tensor scale_rows(const Tensor& a, const Tensor& col) {
    detail::require_same_tape(a, col);
    if (col.cols() != 1 || col.rows() != a.rows())
        throw std::invalid_argument("scale_rows: gate " + detail::shape_str(col) + " vs " +
                                    detail::shape_str(a));
    Tape& tp = *a.tape();
    const std::size_t ia = a.id(), ic = col.id();
    bool rg = tp.node(ia).requires_grad || tp.node(ic).requires_grad;
    Tensor out = tp.make(a.rows(), a.cols(), rg, nullptr);
    const std::size_t io = out.id();
    {
        Tape::Node& no = tp.node(io);
        const Tape::Node& na = tp.node(ia);
        const Tape::Node& nc = tp.node(ic);
        for (std::size_t i = 0; i < na.rows; ++i)
            for (std::size_t j = 0; j < na.cols; ++j)
                no.val[i * na.cols + j] = nc.val[i] * na.val[i * na.cols + j];
        detail::check_finite(no, "scale_rows");
    }
    tp.node(io).backward = [ia, ic, io](Tape& t) {
        Tape::Node& na = t.node(ia);
        Tape::Node& nc = t.node(ic);
        Tape::Node& no = t.node(io);
        for (std::size_t i = 0; i < no.rows; ++i)
            for (std::size_t j = 0; j < no.cols; ++j) {
                double g = no.grad[i * no.cols + j];
                if (na.requires_grad) na.grad[i * no.cols + j] += nc.val[i] * g;
                if (nc.requires_grad) nc.grad[i] += na.val[i * no.cols + j] * g;
            }
    };
    return out;
}

/// Concatenation along the last dimension; operand order is preserved and the
/// gradient splits back block-exactly.
inline Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: no operands");
    Tape& tp = *parts.front().tape();
    std::size_t rows = parts.front().rows();
    std::size_t total = 0;
    bool rg = false;
    for (const Tensor& p : parts) {
        detail::require_same_tape(parts.front(), p);
        if (p.rows() != rows)
            throw std::invalid_argument("concat_cols: row mismatch " +
                                        detail::shape_str(parts.front()) + " vs " +
                                        detail::shape_str(p));
        total += p.cols();
        rg = rg || tp.node(p.id()).requires_grad;
    }
    std::vector<std::size_t> ids, offs;
    std::size_t off = 0;
    for (const Tensor& p : parts) {
        ids.push_back(p.id());
        offs.push_back(off);
        off += p.cols();
    }
    Tensor out = tp.make(rows, total, rg, nullptr);
    const std::size_t io = out.id();
    {
        Tape::Node& no = tp.node(io);
        for (std::size_t pi = 0; pi < ids.size(); ++pi) {
            const Tape::Node& np = tp.node(ids[pi]);
            for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t j = 0; j < np.cols; ++j)
                    no.val[i * total + offs[pi] + j] = np.val[i * np.cols + j];
        }
    }
    tp.node(io).backward = [ids, offs, io, rows, total](Tape& t) {
        Tape::Node& no = t.node(io);
        for (std::size_t pi = 0; pi < ids.size(); ++pi) {
            Tape::Node& np = t.node(ids[pi]);
            if (!np.requires_grad) continue;
            for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t j = 0; j < np.cols; ++j)
                    np.grad[i * np.cols + j] += no.grad[i * total + offs[pi] + j];
        }
    };
    return out;
}

inline Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: no operands");
    Tape& tp = *parts.front().tape();
    std::size_t cols = parts.front().cols();
    std::size_t total = 0;
    bool rg = false;
    for (const Tensor& p : parts) {
        detail::require_same_tape(parts.front(), p);
        if (p.cols() != cols) throw std::invalid_argument("concat_rows: col mismatch");
        total += p.rows();
        rg = rg || tp.node(p.id()).requires_grad;
    }
    std::vector<std::size_t> ids, offs;
    std::size_t off = 0;
    for (const Tensor& p : parts) {
        ids.push_back(p.id());
        offs.push_back(off);
        off += p.rows();
    }
    Tensor out = tp.make(total, cols, rg, nullptr);
    const std::size_t io = out.id();
    for (std::size_t pi = 0; pi < ids.size(); ++pi) {
        const Tape::Node& np = tp.node(ids[pi]);
        std::copy(np.val.begin(), np.val.end(), tp.node(io).val.begin() + offs[pi] * cols);
    }
    tp.node(io).backward = [ids, offs, io, cols](Tape& t) {
        Tape::Node& no = t.node(io);
        for (std::size_t pi = 0; pi < ids.size(); ++pi) {
            Tape::Node& np = t.node(ids[pi]);
            if (!np.requires_grad) continue;
            for (std::size_t i = 0; i < np.val.size(); ++i)
                np.grad[i] += no.grad[offs[pi] * cols + i];
        }
    };
    return out;
}

inline Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
    if (begin >= end || end > a.cols())
        throw std::invalid_argument("slice_cols: bad range [" + std::to_string(begin) + "," +
                                    std::to_string(end) + ") of " + detail::shape_str(a));
    Tape& tp = *a.tape();
    const std::size_t ia = a.id();
    const std::size_t w = end - begin;
    Tensor out = tp.make(a.rows(), w, tp.node(ia).requires_grad, nullptr);
    const std::size_t io = out.id();
    {
        Tape::Node& no = tp.node(io);
        const Tape::Node& na = tp.node(ia);
        for (std::size_t i = 0; i < na.rows; ++i)
            for (std::size_t j = 0; j < w; ++j)
                no.val[i * w + j] = na.val[i * na.cols + begin + j];
    }
    tp.node(io).backward = [ia, io, begin, w](Tape& t) {
        Tape::Node& na = t.node(ia);
        Tape::Node& no = t.node(io);
        if (!na.requires_grad) return;
        for (std::size_t i = 0; i < no.rows; ++i)
            for (std::size_t j = 0; j < w; ++j)
                na.grad[i * na.cols + begin + j] += no.grad[i * w + j];
    };
    return out;
}

inline Tensor select_rows(const Tensor& a, const std::vector<std::size_t>& rows) {
    Tape& tp = *a.tape();
    const std::size_t ia = a.id();
    for (std::size_t r : rows)
        if (r >= a.rows()) throw std::invalid_argument("select_rows: index out of range");
    auto idx = std::make_shared<std::vector<std::size_t>>(rows);
    Tensor out = tp.make(rows.size(), a.cols(), tp.node(ia).requires_grad, nullptr);
    const std::size_t io = out.id();
    {
        Tape::Node& no = tp.node(io);
        const Tape::Node& na = tp.node(ia);
        for (std::size_t r = 0; r < idx->size(); ++r)
            std::copy(na.val.begin() + (*idx)[r] * na.cols,
                      na.val.begin() + ((*idx)[r] + 1) * na.cols, no.val.begin() + r * na.cols);
    }
    tp.node(io).backward = [idx, ia, io](Tape& t) {
        Tape::Node& na = t.node(ia);
        Tape::Node& no = t.node(io);
        if (!na.requires_grad) return;
        for (std::size_t r = 0; r < idx->size(); ++r)
            for (std::size_t j = 0; j < no.cols; ++j)
                na.grad[(*idx)[r] * na.cols + j] += no.grad[r * no.cols + j];
    };
    return out;
}

inline Tensor row_softmax(const Tensor& a) {
    Tape& tp = *a.tape();
    const std::size_t ia = a.id();
    Tensor out = tp.make(a.rows(), a.cols(), tp.node(ia).requires_grad, nullptr);
    const std::size_t io = out.id();
    {
        Tape::Node& no = tp.node(io);
        const Tape::Node& na = tp.node(ia);
        for (std::size_t i = 0; i < na.rows; ++i) {
            double mx = na.val[i * na.cols];
            for (std::size_t j = 1; j < na.cols; ++j)
                mx = std::max(mx, na.val[i * na.cols + j]);
            double sum = 0.0;
            for (std::size_t j = 0; j < na.cols; ++j) {
                double e = std::exp(na.val[i * na.cols + j] - mx);
                no.val[i * na.cols + j] = e;
                sum += e;
            }
            for (std::size_t j = 0; j < na.cols; ++j) no.val[i * na.cols + j] /= sum;
        }
        detail::check_finite(no, "row_softmax");
    }
    tp.node(io).backward = [ia, io](Tape& t) {
        Tape::Node& na = t.node(ia);
        Tape::Node& no = t.node(io);
        if (!na.requires_grad) return;
        for (std::size_t i = 0; i < no.rows; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < no.cols; ++j)
                dot += no.grad[i * no.cols + j] * no.val[i * no.cols + j];
            for (std::size_t j = 0; j < no.cols; ++j)
                na.grad[i * no.cols + j] +=
                    no.val[i * no.cols + j] * (no.grad[i * no.cols + j] - dot);
        }
    };
    return out;
}

inline Tensor transpose(const Tensor& a) {
    Tape& tp = *a.tape();
    const std::size_t ia = a.id();
    Tensor out = tp.make(a.cols(), a.rows(), tp.node(ia).requires_grad, nullptr);
    const std::size_t io = out.id();
    {
        Tape::Node& no = tp.node(io);
        const Tape::Node& na = tp.node(ia);
        for (std::size_t i = 0; i < na.rows; ++i)
            for (std::size_t j = 0; j < na.cols; ++j)
                no.val[j * na.rows + i] = na.val[i * na.cols + j];
    }
    tp.node(io).backward = [ia, io](Tape& t) {
        Tape::Node& na = t.node(ia);
        Tape::Node& no = t.node(io);
        if (!na.requires_grad) return;
        for (std::size_t i = 0; i < na.rows; ++i)
            for (std::size_t j = 0; j < na.cols; ++j)
                na.grad[i * na.cols + j] += no.grad[j * na.rows + i];
    };
    return out;
}

/// Row softmax restricted to the support of a 0/1 mask; rows with empty
/// support come out all-zero. Used by the optional attention coefficients.
inline Tensor masked_row_softmax(const Tensor& a, const Matrix& mask) {
    if (mask.rows != a.rows() || mask.cols != a.cols())
        throw std::invalid_argument("masked_row_softmax: mask shape mismatch");
    Tape& tp = *a.tape();
    const std::size_t ia = a.id();
    auto mk = std::make_shared<Matrix>(mask);
    Tensor out = tp.make(a.rows(), a.cols(), tp.node(ia).requires_grad, nullptr);
    const std::size_t io = out.id();
    {
        Tape::Node& no = tp.node(io);
        const Tape::Node& na = tp.node(ia);
        for (std::size_t i = 0; i < na.rows; ++i) {
            double mx = 0.0;
            bool any = false;
            for (std::size_t j = 0; j < na.cols; ++j)
                if ((*mk)(i, j) != 0.0) {
                    double v = na.val[i * na.cols + j];
                    mx = any ? std::max(mx, v) : v;
                    any = true;
                }
            if (!any) continue;
            double sum = 0.0;
            for (std::size_t j = 0; j < na.cols; ++j)
                if ((*mk)(i, j) != 0.0) {
                    double e = std::exp(na.val[i * na.cols + j] - mx);
                    no.val[i * na.cols + j] = e;
                    sum += e;
                }
            for (std::size_t j = 0; j < na.cols; ++j) no.val[i * na.cols + j] /= sum;
        }
        detail::check_finite(no, "masked_row_softmax");
    }
    tp.node(io).backward = [ia, io, mk](Tape& t) {
        Tape::Node& na = t.node(ia);
        Tape::Node& no = t.node(io);
        if (!na.requires_grad) return;
        for (std::size_t i = 0; i < no.rows; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < no.cols; ++j)
                dot += no.grad[i * no.cols + j] * no.val[i * no.cols + j];
            for (std::size_t j = 0; j < no.cols; ++j)
                if ((*mk)(i, j) != 0.0)
                    na.grad[i * no.cols + j] +=
                        no.val[i * no.cols + j] * (no.grad[i * no.cols + j] - dot);
        }
    };
    return out;
}

/// Per-row inner product: out is n x 1.
inline Tensor rowwise_dot(const Tensor& a, const Tensor& b) {
    detail::require_same_tape(a, b);
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("rowwise_dot: shape mismatch " + detail::shape_str(a) +
                                    " vs " + detail::shape_str(b));
    Tape& tp = *a.tape();
    const std::size_t ia = a.id(), ib = b.id();
    bool rg = tp.node(ia).requires_grad || tp.node(ib).requires_grad;
    Tensor out = tp.make(a.rows(), 1, rg, nullptr);
    const std::size_t io = out.id();
    {
        Tape::Node& no = tp.node(io);
        const Tape::Node& na = tp.node(ia);
        const Tape::Node& nb = tp.node(ib);
        for (std::size_t i = 0; i < na.rows; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < na.cols; ++j)
                s += na.val[i * na.cols + j] * nb.val[i * na.cols + j];
            no.val[i] = s;
        }
        detail::check_finite(no, "rowwise_dot");
    }
    tp.node(io).backward = [ia, ib, io](Tape& t) {
        Tape::Node& na = t.node(ia);
        Tape::Node& nb = t.node(ib);
        Tape::Node& no = t.node(io);
        for (std::size_t i = 0; i < no.rows; ++i) {
            double g = no.grad[i];
            if (g == 0.0) continue;
            for (std::size_t j = 0; j < na.cols; ++j) {
                if (na.requires_grad) na.grad[i * na.cols + j] += g * nb.val[i * na.cols + j];
                if (nb.requires_grad) nb.grad[i * na.cols + j] += g * na.val[i * na.cols + j];
            }
        }
    };
    return out;
}

/// Column-wise sum over rows (the sum readout): out is 1 x c.
inline Tensor col_sum(const Tensor& a) {
    Tape& tp = *a.tape();
    const std::size_t ia = a.id();
    Tensor out = tp.make(1, a.cols(), tp.node(ia).requires_grad, nullptr);
    const std::size_t io = out.id();
    {
        Tape::Node& no = tp.node(io);
        const Tape::Node& na = tp.node(ia);
        for (std::size_t i = 0; i < na.rows; ++i)
            for (std::size_t j = 0; j < na.cols; ++j) no.val[j] += na.val[i * na.cols + j];
        detail::check_finite(no, "col_sum");
    }
    tp.node(io).backward = [ia, io](Tape& t) {
        Tape::Node& na = t.node(ia);
        Tape::Node& no = t.node(io);
        if (!na.requires_grad) return;
        for (std::size_t i = 0; i < na.rows; ++i)
            for (std::size_t j = 0; j < na.cols; ++j) na.grad[i * na.cols + j] += no.grad[j];
    };
    return out;
}

inline Tensor sum_all(const Tensor& a) {
    Tape& tp = *a.tape();
    const std::size_t ia = a.id();
    Tensor out = tp.make(1, 1, tp.node(ia).requires_grad, nullptr);
    const std::size_t io = out.id();
    {
        Tape::Node& no = tp.node(io);
        const Tape::Node& na = tp.node(ia);
        double s = 0.0;
        for (double v : na.val) s += v;
        no.val[0] = s;
        detail::check_finite(no, "sum_all");
    }
    tp.node(io).backward = [ia, io](Tape& t) {
        Tape::Node& na = t.node(ia);
        Tape::Node& no = t.node(io);
        if (!na.requires_grad) return;
        for (double& g : na.grad) g += no.grad[0];
    };
    return out;
}

/// Negative log likelihood over selected (row, class) cells of a probability
/// matrix: -sum_r log probs(rows[r], classes[r]). 1x1 output.
inline Tensor gather_nll(const Tensor& probs, const std::vector<std::size_t>& rows,
                         const std::vector<int>& classes) {
    if (rows.size() != classes.size())
        throw std::invalid_argument("gather_nll: rows/classes size mismatch");
    Tape& tp = *probs.tape();
    const std::size_t ip = probs.id();
    auto rr = std::make_shared<std::vector<std::size_t>>(rows);
    auto cc = std::make_shared<std::vector<int>>(classes);
    for (std::size_t r = 0; r < rows.size(); ++r)
        if (rows[r] >= probs.rows() || classes[r] < 0 ||
            static_cast<std::size_t>(classes[r]) >= probs.cols())
            throw std::invalid_argument("gather_nll: index out of range");
    Tensor out = tp.make(1, 1, tp.node(ip).requires_grad, nullptr);
    const std::size_t io = out.id();
    {
        Tape::Node& no = tp.node(io);
        const Tape::Node& np = tp.node(ip);
        double s = 0.0;
        for (std::size_t r = 0; r < rr->size(); ++r)
            s -= std::log(np.val[(*rr)[r] * np.cols + (*cc)[r]]);
        no.val[0] = s;
        detail::check_finite(no, "gather_nll");
    }
    tp.node(io).backward = [rr, cc, ip, io](Tape& t) {
        Tape::Node& np = t.node(ip);
        Tape::Node& no = t.node(io);
        if (!np.requires_grad) return;
        for (std::size_t r = 0; r < rr->size(); ++r) {
            std::size_t cell = (*rr)[r] * np.cols + (*cc)[r];
            np.grad[cell] -= no.grad[0] / np.val[cell];
        }
    };
    return out;
}

} // namespace ops

// ---------------------------------------------------------------------------
// Named parameters, checkpointing, gradient checking.
// ---------------------------------------------------------------------------

struct Parameter {
    std::string name;
    Matrix value;
    Matrix grad; // filled by ParameterStore::collect_grads
};

class ParameterStore {
public:
    std::size_t add(const std::string& name, Matrix init) {
        if (index_.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
        index_[name] = params_.size();
        params_.push_back(Parameter{name, std::move(init), Matrix{}});
        return params_.size() - 1;
    }

    std::size_t size() const { return params_.size(); }
    Parameter& at(std::size_t i) { return params_[i]; }
    const Parameter& at(std::size_t i) const { return params_[i]; }
    Parameter& by_name(const std::string& name) { return params_[index_.at(name)]; }
    const Parameter& by_name(const std::string& name) const { return params_[index_.at(name)]; }
    bool has(const std::string& name) const { return index_.count(name) > 0; }

    /// Leaf tensors on the tape, one per parameter, in store order.
    std::vector<Tensor> bind(Tape& tape) const {
        std::vector<Tensor> out;
        out.reserve(params_.size());
        for (const Parameter& p : params_) out.push_back(tape.leaf(p.value, true));
        return out;
    }

    void collect_grads(const Tape& tape, const std::vector<Tensor>& bound) {
        if (bound.size() != params_.size())
            throw std::invalid_argument("collect_grads: binding size mismatch");
        for (std::size_t i = 0; i < params_.size(); ++i)
            params_[i].grad = tape.grad_of(bound[i]);
    }

private:
    std::vector<Parameter> params_;
    std::map<std::string, std::size_t> index_;
};

/// Smallest |input| at any kinked activation (relu, elementwise maximum) on
/// the tape. A finite-difference probe is only meaningful when the step stays
/// well below this distance; at a kink the two-sided difference does not
/// estimate either one-sided derivative.
inline double min_kink_distance(const Tape& tape) {
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t id = 0; id < tape.size(); ++id) {
        const Tape::Node& n = tape.node(id);
        std::string_view op = n.op;
        if (op == "relu") {
            for (double v : tape.node(n.parents[0]).val) d = std::min(d, std::abs(v));
        } else if (op == "maximum") {
            const Tape::Node& a = tape.node(n.parents[0]);
            const Tape::Node& b = tape.node(n.parents[1]);
            for (std::size_t i = 0; i < a.val.size(); ++i)
                d = std::min(d, std::abs(a.val[i] - b.val[i]));
        }
    }
    return d;
}

/// Scalar loss as a function of bound parameter tensors.
using LossFn = std::function<Tensor(Tape&, const std::vector<Tensor>&)>;

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_param;
};

/// Central finite differences per coordinate against the tape gradients.
/// Relative error denominator: max(|analytic|, |numeric|, 1e-8).
inline GradCheckResult grad_check(const LossFn& f, ParameterStore& params, double step = 1e-5) {
    {
        Tape tape;
        auto bound = params.bind(tape);
        Tensor loss = f(tape, bound);
        tape.backward(loss);
        params.collect_grads(tape, bound);
    }
    GradCheckResult res;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Parameter& p = params.at(pi);
        for (std::size_t i = 0; i < p.value.data.size(); ++i) {
            double orig = p.value.data[i];
            auto eval = [&](double x) {
                p.value.data[i] = x;
                Tape tape;
                auto bound = params.bind(tape);
                double v = f(tape, bound).scalar();
                p.value.data[i] = orig;
                return v;
            };
            double fp = eval(orig + step);
            double fm = eval(orig - step);
            if (!std::isfinite(fp) || !std::isfinite(fm))
                throw std::runtime_error("grad_check: non-finite evaluation at " + p.name);
            double numeric = (fp - fm) / (2.0 * step);
            double analytic = p.grad.data[i];
            double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
            double rel = std::abs(analytic - numeric) / denom;
            if (rel > res.max_rel_error) {
                res.max_rel_error = rel;
                res.worst_param = p.name;
            }
        }
    }
    return res;
}

} // namespace mgnn
