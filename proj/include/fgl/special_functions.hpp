#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "fgl/fractional_order.hpp"

namespace fgl {

/// Gamma function on the real line, poles excluded.
///
/// Uses std::tgamma directly for x >= 0.5 and the reflection formula
/// Gamma(x) Gamma(1-x) = pi / sin(pi x) below, which keeps the relative error
/// near machine precision for negative non-integer arguments.
inline double gamma_fn(double x) {
    if (!std::isfinite(x)) {
        throw std::domain_error("gamma_fn: argument must be finite");
    }
    if (x <= 0.0 && x == std::floor(x)) {
        throw std::domain_error("gamma_fn: pole at non-positive integer " + std::to_string(x));
    }
    double g;
    if (x >= 0.5) {
        g = std::tgamma(x);
    } else {
        g = std::numbers::pi / (std::sin(std::numbers::pi * x) * std::tgamma(1.0 - x));
    }
    if (!std::isfinite(g)) {
        throw std::overflow_error("gamma_fn: value not representable at x = " +
                                  std::to_string(x));
    }
    return g;
}

/// a_alpha = 2 Gamma(-alpha) cos(pi alpha / 2), the long-range lattice sum
/// prefactor of the small-wavenumber |k|^alpha contribution.
///
/// Negative throughout (0, 2) and divergent at the endpoints' integer orders,
/// so the Laplacian limit alpha == 2 is rejected here.
inline double infrared_coefficient(const FractionalOrder& order) {
    const double alpha = order.value();
    if (order.is_laplacian_limit()) {
        throw std::domain_error("infrared_coefficient: undefined at order 2");
    }
    return 2.0 * gamma_fn(-alpha) * std::cos(0.5 * std::numbers::pi * alpha);
}

/// 2 * zeta(alpha + 1): the two-sided sum over nonzero integers of
/// |n|^-(alpha+1). Requires alpha > 0 for convergence.
///
/// Partial sum plus Euler-Maclaurin tail; the first omitted correction is
/// kept below 1e-12, so the absolute error is comfortably under 1e-10.
inline double zeta_sum(double alpha) {
    if (!std::isfinite(alpha) || alpha <= 0.0) {
        throw std::domain_error("zeta_sum: exponent must satisfy alpha > 0, got " +
                                std::to_string(alpha));
    }
    const double s = alpha + 1.0;

    // First omitted Euler-Maclaurin term is s(s+1)(s+2) M^-(s+3) / 720.
    const double target = 1e-12;
    double n_min = std::pow(s * (s + 1.0) * (s + 2.0) / (720.0 * target), 1.0 / (s + 3.0));
    int n = std::max(16, static_cast<int>(std::ceil(n_min)));

    double partial = 0.0;
    for (int i = n; i >= 1; --i) {
        partial += std::pow(static_cast<double>(i), -s);
    }
    const double m = static_cast<double>(n) + 1.0;
    const double tail = std::pow(m, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(m, -s) +
                        s * std::pow(m, -s - 1.0) / 12.0;
    return 2.0 * (partial + tail);
}

}  // namespace fgl
