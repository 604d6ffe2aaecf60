#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "mgnn/matrix.hpp"

namespace mgnn {

struct CooEntry {
    std::size_t row = 0;
    std::size_t col = 0;
    double value = 0.0;
};

/// Square sparse matrix in sorted-COO form. Holds the per-motif count
/// matrices (entries are nonnegative and integral there) as well as any
/// other sparse operand.
struct SparseMatrix {
    std::size_t dim = 0;
    std::vector<CooEntry> entries; // sorted by (row, col), no duplicates

    static SparseMatrix from_unsorted(std::size_t dim, std::vector<CooEntry> raw,
                                      bool sum_duplicates = true) {
        std::sort(raw.begin(), raw.end(), [](const CooEntry& a, const CooEntry& b) {
            return a.row != b.row ? a.row < b.row : a.col < b.col;
        });
        SparseMatrix m;
        m.dim = dim;
        for (const CooEntry& e : raw) {
            if (e.row >= dim || e.col >= dim)
                throw std::invalid_argument("sparse entry out of range");
            if (!m.entries.empty() && m.entries.back().row == e.row &&
                m.entries.back().col == e.col) {
                if (!sum_duplicates)
                    throw std::invalid_argument("duplicate sparse entry");
                m.entries.back().value += e.value;
            } else {
                m.entries.push_back(e);
            }
        }
        std::erase_if(m.entries, [](const CooEntry& e) { return e.value == 0.0; });
        return m;
    }

    std::size_t nnz() const { return entries.size(); }

    bool all_finite() const {
        for (const CooEntry& e : entries)
            if (!std::isfinite(e.value)) return false;
        return true;
    }

    Matrix to_dense() const {
        Matrix d(dim, dim);
        for (const CooEntry& e : entries) d(e.row, e.col) = e.value;
        return d;
    }

    bool operator==(const SparseMatrix& o) const {
        if (dim != o.dim || entries.size() != o.entries.size()) return false;
        for (std::size_t i = 0; i < entries.size(); ++i)
            if (entries[i].row != o.entries[i].row || entries[i].col != o.entries[i].col ||
                entries[i].value != o.entries[i].value)
                return false;
        return true;
    }
};

/// Compressed-sparse-row view used by the hot paths (census, layer forward).
struct Csr {
    std::size_t dim = 0;
    std::vector<std::size_t> row_ptr; // size dim+1
    std::vector<std::size_t> col;
    std::vector<double> val;

    static Csr from_coo(const SparseMatrix& m) {
        Csr c;
        c.dim = m.dim;
        c.row_ptr.assign(m.dim + 1, 0);
        c.col.resize(m.nnz());
        c.val.resize(m.nnz());
        for (const CooEntry& e : m.entries) c.row_ptr[e.row + 1]++;
        for (std::size_t i = 0; i < m.dim; ++i) c.row_ptr[i + 1] += c.row_ptr[i];
        std::size_t k = 0;
        for (const CooEntry& e : m.entries) {
            c.col[k] = e.col;
            c.val[k] = e.value;
            ++k;
        }
        return c;
    }

    std::size_t row_begin(std::size_t i) const { return row_ptr[i]; }
    std::size_t row_end(std::size_t i) const { return row_ptr[i + 1]; }
    std::size_t nnz() const { return col.size(); }
};

class PowerIterationError : public std::runtime_error {
public:
    PowerIterationError(const std::string& what, double last)
        : std::runtime_error(what), last_estimate(last) {}
    double last_estimate;
};

/// Degree-normalized, spectrally shifted adjacency per the layer contract:
/// entries s_i * a_ij * s_j with s_i = rowsum^{-1/2} (0 for zero rows), and
/// lambda_max/2 subtracted on the diagonal of structurally nonzero rows.
struct NormalizedAdjacency {
    Csr matrix;
    double lambda_max = 0.0;
};

namespace detail {

// Power iteration on (A_hat + I); the unit shift separates the dominant
// eigenvalue of any nonnegative matrix (bipartite spectra have +/-lambda
// pairs that stall the unshifted iteration).
inline double estimate_lambda_max(const Csr& a_hat, double tol, std::size_t max_iter) {
    const std::size_t n = a_hat.dim;
    if (n == 0) return 0.0;
    std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n)));
    std::vector<double> y(n);
    double lambda_prev = 0.0;
    bool have_prev = false;
    for (std::size_t it = 0; it < max_iter; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = x[i]; // the +I shift
            for (std::size_t k = a_hat.row_begin(i); k < a_hat.row_end(i); ++k)
                s += a_hat.val[k] * x[a_hat.col[k]];
            y[i] = s;
        }
        double rayleigh = 0.0;
        double norm2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            rayleigh += x[i] * y[i];
            norm2 += y[i] * y[i];
        }
        double lambda = rayleigh - 1.0;
        if (have_prev && std::abs(lambda - lambda_prev) <= tol * std::max(1.0, std::abs(lambda)))
            return std::max(lambda, 0.0);
        lambda_prev = lambda;
        have_prev = true;
        double norm = std::sqrt(norm2);
        if (norm == 0.0) return 0.0;
        for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / norm;
    }
    throw PowerIterationError("power iteration did not converge within " +
                                  std::to_string(max_iter) + " iterations",
                              lambda_prev);
}

} // namespace detail

inline NormalizedAdjacency normalize_adjacency(const SparseMatrix& a, double tol = 1e-6,
                                               std::size_t max_iter = 1000) {
    if (tol <= 0.0) throw std::invalid_argument("normalize_adjacency: tol must be positive");
    if (!a.all_finite())
        throw std::invalid_argument("normalize_adjacency: non-finite entries");

    std::vector<double> row_sum(a.dim, 0.0);
    for (const CooEntry& e : a.entries) row_sum[e.row] += e.value;
    std::vector<double> inv_sqrt(a.dim, 0.0);
    for (std::size_t i = 0; i < a.dim; ++i)
        inv_sqrt[i] = row_sum[i] > 0.0 ? 1.0 / std::sqrt(row_sum[i]) : 0.0;

    std::vector<CooEntry> hat;
    hat.reserve(a.nnz());
    for (const CooEntry& e : a.entries) {
        double v = inv_sqrt[e.row] * e.value * inv_sqrt[e.col];
        if (v != 0.0) hat.push_back({e.row, e.col, v});
    }
    SparseMatrix a_hat = SparseMatrix::from_unsorted(a.dim, std::move(hat));
    Csr hat_csr = Csr::from_coo(a_hat);

    double lambda = detail::estimate_lambda_max(hat_csr, tol, max_iter);

    std::vector<CooEntry> shifted = a_hat.entries;
    for (std::size_t i = 0; i < a.dim; ++i)
        if (row_sum[i] > 0.0) shifted.push_back({i, i, -lambda / 2.0});
    NormalizedAdjacency out;
    out.matrix = Csr::from_coo(SparseMatrix::from_unsorted(a.dim, std::move(shifted)));
    out.lambda_max = lambda;
    return out;
}

} // namespace mgnn
