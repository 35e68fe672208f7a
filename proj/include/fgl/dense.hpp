#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fgl/errors.hpp"

namespace fgl {

/// Dense row-major matrix of doubles.
class DenseMatrix {
public:
    DenseMatrix() = default;

    DenseMatrix(int rows, int cols) {
        if (rows < 0 || cols < 0) {
            throw std::invalid_argument("DenseMatrix: negative extent");
        }
        rows_ = rows;
        cols_ = cols;
        a_.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0);
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int i, int j) { return a_[index(i, j)]; }
    double operator()(int i, int j) const { return a_[index(i, j)]; }

    std::span<double> row(int i) {
        return {a_.data() + index(i, 0), static_cast<std::size_t>(cols_)};
    }
    std::span<const double> row(int i) const {
        return {a_.data() + index(i, 0), static_cast<std::size_t>(cols_)};
    }

    /// y = A x
    void apply(std::span<const double> x, std::span<double> y) const {
        if (static_cast<int>(x.size()) != cols_ || static_cast<int>(y.size()) != rows_) {
            throw std::invalid_argument("DenseMatrix::apply: size mismatch");
        }
        for (int i = 0; i < rows_; ++i) {
            const double* r = a_.data() + index(i, 0);
            double s = 0.0;
            for (int j = 0; j < cols_; ++j) {
                s += r[j] * x[j];
            }
            y[i] = s;
        }
    }

    std::vector<double> apply(std::span<const double> x) const {
        std::vector<double> y(static_cast<std::size_t>(rows_));
        apply(x, y);
        return y;
    }

private:
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(cols_) +
               static_cast<std::size_t>(j);
    }

    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> a_;
};

/// LU factorization with partial pivoting, done once at construction.
///
/// A pivot whose magnitude falls below pivot_rel_tol times the max-abs of its
/// original row is treated as numerically singular.
class LuFactorization {
public:
    explicit LuFactorization(DenseMatrix a, double pivot_rel_tol = 1e-14)
        : lu_(std::move(a)) {
        factor(pivot_rel_tol);
    }

    int size() const { return lu_.rows(); }

    void solve_in_place(std::span<double> b) const {
        const int n = lu_.rows();
        if (static_cast<int>(b.size()) != n) {
            throw std::invalid_argument("LuFactorization::solve_in_place: size mismatch");
        }
        for (int k = 0; k < n; ++k) {
            std::swap(b[k], b[piv_[k]]);
        }
        for (int i = 1; i < n; ++i) {
            std::span<const double> r = lu_.row(i);
            double s = b[i];
            for (int j = 0; j < i; ++j) {
                s -= r[j] * b[j];
            }
            b[i] = s;
        }
        for (int i = n - 1; i >= 0; --i) {
            std::span<const double> r = lu_.row(i);
            double s = b[i];
            for (int j = i + 1; j < n; ++j) {
                s -= r[j] * b[j];
            }
            b[i] = s / r[i];
        }
    }

    std::vector<double> solve(std::vector<double> b) const {
        solve_in_place(b);
        return b;
    }

private:
    void factor(double pivot_rel_tol) {
        const int n = lu_.rows();
        if (lu_.cols() != n) {
            throw std::invalid_argument("LuFactorization: matrix must be square");
        }
        piv_.assign(static_cast<std::size_t>(n), 0);

        std::vector<double> scale(static_cast<std::size_t>(n), 0.0);
        for (int i = 0; i < n; ++i) {
            double m = 0.0;
            for (double v : lu_.row(i)) {
                m = std::max(m, std::abs(v));
            }
            scale[static_cast<std::size_t>(i)] = m;
        }

        for (int k = 0; k < n; ++k) {
            int p = k;
            double best = std::abs(lu_(k, k));
            for (int i = k + 1; i < n; ++i) {
                double v = std::abs(lu_(i, k));
                if (v > best) {
                    best = v;
                    p = i;
                }
            }
            const double row_scale = scale[static_cast<std::size_t>(p)];
            if (row_scale == 0.0 || best < pivot_rel_tol * row_scale) {
                throw numerical_error("LuFactorization: matrix is numerically singular (pivot " +
                                      std::to_string(best) + " at column " + std::to_string(k) +
                                      ")");
            }
            piv_[static_cast<std::size_t>(k)] = p;
            if (p != k) {
                std::span<double> rk = lu_.row(k);
                std::span<double> rp = lu_.row(p);
                for (int j = 0; j < n; ++j) {
                    std::swap(rk[j], rp[j]);
                }
                std::swap(scale[static_cast<std::size_t>(k)], scale[static_cast<std::size_t>(p)]);
            }
            const double d = lu_(k, k);
            std::span<const double> rk = lu_.row(k);
            for (int i = k + 1; i < n; ++i) {
                std::span<double> ri = lu_.row(i);
                const double l = ri[k] / d;
                ri[k] = l;
                if (l != 0.0) {
                    for (int j = k + 1; j < n; ++j) {
                        ri[j] -= l * rk[j];
                    }
                }
            }
        }
    }

    DenseMatrix lu_;
    std::vector<int> piv_;
};

}  // namespace fgl
