#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fgl/dense.hpp"
#include "fgl/fractional_order.hpp"
#include "fgl/special_functions.hpp"

namespace fgl {

/// Fractional centered-difference weight table w_k, |k| <= half_width.
///
/// Only k >= 0 is stored; symmetry w_k == w_-k then holds bit-exactly.
/// Invariants: w_0 > 0; w_k < 0 for k != 0 when alpha < 2; at alpha == 2 the
/// table degenerates to the classical stencil (2, -1, 0, ...).
class RieszWeights {
public:
    RieszWeights(const FractionalOrder& order, int half_width) : alpha_(order.value()) {
        if (half_width < 1) {
            throw std::invalid_argument("RieszWeights: half_width must be >= 1");
        }
        w_.resize(static_cast<std::size_t>(half_width) + 1);
        const double half = 0.5 * alpha_;
        const double g = gamma_fn(half + 1.0);
        w_[0] = gamma_fn(alpha_ + 1.0) / (g * g);
        // Ratio recurrence: w_{k+1} = w_k (k - alpha/2) / (k + 1 + alpha/2).
        for (int k = 0; k < half_width; ++k) {
            w_[static_cast<std::size_t>(k) + 1] =
                w_[static_cast<std::size_t>(k)] * (static_cast<double>(k) - half) /
                (static_cast<double>(k) + 1.0 + half);
        }
    }

    double alpha() const { return alpha_; }
    int half_width() const { return static_cast<int>(w_.size()) - 1; }

    double at(int k) const {
        const int a = k < 0 ? -k : k;
        if (a >= static_cast<int>(w_.size())) {
            throw std::out_of_range("RieszWeights::at: |k| exceeds half_width");
        }
        return w_[static_cast<std::size_t>(a)];
    }

private:
    double alpha_;
    std::vector<double> w_;
};

inline RieszWeights riesz_weights(const FractionalOrder& order, int half_width) {
    return RieszWeights(order, half_width);
}

/// Riesz derivative of a zero-extended interior field:
/// y_i = -(1/h^alpha) sum_j w_{i-j} field_j.
///
/// The weight window must cover every offset that occurs, i.e.
/// half_width >= field.size() - 1; a full window (>= field.size()) is also
/// accepted.
inline std::vector<double> apply_riesz(const RieszWeights& weights,
                                       std::span<const double> field, double h) {
    if (!(h > 0.0)) {
        throw std::invalid_argument("apply_riesz: spacing h must be positive");
    }
    const int n = static_cast<int>(field.size());
    if (weights.half_width() < n - 1) {
        throw std::invalid_argument("apply_riesz: weight window does not cover the field");
    }
    const double scale = -1.0 / std::pow(h, weights.alpha());
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) {
            s += weights.at(i - j) * field[static_cast<std::size_t>(j)];
        }
        out[static_cast<std::size_t>(i)] = scale * s;
    }
    return out;
}

/// Dense symmetric Toeplitz matrix P with entries
/// P(i, j) = (scale_coefficient / h^alpha) w_{i-j}.
///
/// Applying P to a field equals -scale_coefficient times apply_riesz of the
/// same field: the leading minus of the derivative is NOT baked in here.
class RieszOperatorMatrix {
public:
    RieszOperatorMatrix(const FractionalOrder& order, double h, int interior_size,
                        double scale_coefficient)
        : alpha_(order.value()), scale_(scale_coefficient) {
        if (!(h > 0.0)) {
            throw std::invalid_argument("RieszOperatorMatrix: spacing h must be positive");
        }
        if (interior_size < 1) {
            throw std::invalid_argument("RieszOperatorMatrix: interior size must be >= 1");
        }
        const RieszWeights w(order, interior_size);
        const double c = scale_coefficient / std::pow(h, alpha_);
        entries_ = DenseMatrix(interior_size, interior_size);
        for (int i = 0; i < interior_size; ++i) {
            for (int j = 0; j < interior_size; ++j) {
                entries_(i, j) = c * w.at(i - j);
            }
        }
    }

    int size() const { return entries_.rows(); }
    double alpha() const { return alpha_; }
    double scale_coefficient() const { return scale_; }
    double entry(int i, int j) const { return entries_(i, j); }
    const DenseMatrix& entries() const { return entries_; }

    void apply(std::span<const double> x, std::span<double> y) const { entries_.apply(x, y); }

    std::vector<double> apply(std::span<const double> x) const { return entries_.apply(x); }

private:
    double alpha_;
    double scale_;
    DenseMatrix entries_;
};

inline RieszOperatorMatrix assemble_riesz_matrix(const FractionalOrder& order, double h,
                                                 int interior_size, double scale_coefficient) {
    return RieszOperatorMatrix(order, h, interior_size, scale_coefficient);
}

}  // namespace fgl
