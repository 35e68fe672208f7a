#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace fgl {

/// Validated fractional differentiation order.
///
/// Admits alpha in (0, 2] except alpha == 1, where the symbol loses its
/// derivative structure. alpha == 2 is the classical Laplacian limit; callers
/// whose formulas break down there must reject it themselves.
class FractionalOrder {
public:
    explicit FractionalOrder(double alpha) : alpha_(alpha) {
        if (!std::isfinite(alpha) || alpha <= 0.0 || alpha > 2.0) {
            throw std::domain_error("fractional order must lie in (0, 2], got " +
                                    std::to_string(alpha));
        }
        if (alpha == 1.0) {
            throw std::domain_error("fractional order 1 is excluded");
        }
    }

    double value() const { return alpha_; }
    bool is_laplacian_limit() const { return alpha_ == 2.0; }

private:
    double alpha_;
};

}  // namespace fgl
