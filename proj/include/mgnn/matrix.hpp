#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mgnn {

/// Dense row-major matrix of doubles. Used for node features, small test
/// fixtures and anywhere a plain (non-differentiated) array is enough.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw std::invalid_argument("matmul: shape mismatch (" + std::to_string(a.rows) + "x" +
                                    std::to_string(a.cols) + ") * (" + std::to_string(b.rows) +
                                    "x" + std::to_string(b.cols) + ")");
    Matrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t k = 0; k < a.cols; ++k) {
            double av = a(i, k);
            if (av == 0.0) continue;
            for (std::size_t j = 0; j < b.cols; ++j)
                out(i, j) += av * b(k, j);
        }
    return out;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b))
        throw std::invalid_argument("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

} // namespace mgnn
