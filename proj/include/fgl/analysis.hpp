#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace fgl {

inline std::vector<double> linspace(double lo, double hi, int count) {
    if (count < 2) {
        throw std::invalid_argument("linspace: need at least two points");
    }
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        out[static_cast<std::size_t>(i)] =
            lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    return out;
}

/// Least-squares slope of ln(error) against ln(parameter).
inline double fitted_order(std::span<const double> params, std::span<const double> errors) {
    if (params.size() != errors.size() || params.size() < 2) {
        throw std::invalid_argument("fitted_order: need matching samples, at least two");
    }
    const auto n = static_cast<double>(params.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        mx += std::log(params[i]);
        my += std::log(std::max(errors[i], 1e-300));
    }
    mx /= n;
    my /= n;
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double dx = std::log(params[i]) - mx;
        num += dx * (std::log(std::max(errors[i], 1e-300)) - my);
        den += dx * dx;
    }
    return num / den;
}

/// Observed order between two rungs of a refinement ladder.
inline double pairwise_order(double p_coarse, double e_coarse, double p_fine, double e_fine) {
    return std::log(std::max(e_coarse, 1e-300) / std::max(e_fine, 1e-300)) /
           std::log(p_coarse / p_fine);
}

}  // namespace fgl
