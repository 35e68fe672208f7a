#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fgl/cfgl.hpp"
#include "fgl/dense.hpp"
#include "fgl/errors.hpp"
#include "fgl/fractional_order.hpp"
#include "fgl/riesz.hpp"

namespace fgl {

/// Uniform grid on [0, length] with `subintervals` cells. Unknowns live at
/// the interior nodes x_i = i h, i = 1 .. subintervals - 1; the endpoint
/// values are pinned to zero by the representation.
class Grid {
public:
    Grid(double length, int subintervals) : length_(length), subintervals_(subintervals) {
        if (!(length > 0.0)) {
            throw std::invalid_argument("Grid: length must be positive");
        }
        if (subintervals < 2) {
            throw std::invalid_argument("Grid: need at least 2 subintervals");
        }
    }

    double length() const { return length_; }
    int subintervals() const { return subintervals_; }
    double h() const { return length_ / subintervals_; }
    int interior() const { return subintervals_ - 1; }

    std::vector<double> interior_coordinates() const {
        std::vector<double> x(static_cast<std::size_t>(interior()));
        const double spacing = h();
        for (int i = 0; i < interior(); ++i) {
            x[static_cast<std::size_t>(i)] = spacing * static_cast<double>(i + 1);
        }
        return x;
    }

private:
    double length_;
    int subintervals_;
};

/// Real and imaginary parts of the envelope on the interior nodes.
struct ComplexField {
    std::vector<double> u;
    std::vector<double> v;

    static ComplexField zeros(int n) {
        ComplexField f;
        f.u.assign(static_cast<std::size_t>(n), 0.0);
        f.v.assign(static_cast<std::size_t>(n), 0.0);
        return f;
    }

    static ComplexField from_complex(std::span<const std::complex<double>> values) {
        ComplexField f;
        f.u.reserve(values.size());
        f.v.reserve(values.size());
        for (const auto& z : values) {
            f.u.push_back(z.real());
            f.v.push_back(z.imag());
        }
        return f;
    }

    int size() const { return static_cast<int>(u.size()); }

    void require_consistent() const {
        if (u.size() != v.size()) {
            throw std::invalid_argument("ComplexField: component size mismatch");
        }
    }
};

inline double max_abs2(const ComplexField& f) {
    double m = 0.0;
    for (std::size_t i = 0; i < f.u.size(); ++i) {
        const double a2 = f.u[i] * f.u[i] + f.v[i] * f.v[i];
        if (std::isnan(a2)) {
            return a2;  // std::max would silently drop the NaN
        }
        m = std::max(m, a2);
    }
    return m;
}

/// Discrete L2 norm sqrt(h sum |B_i|^2).
inline double l2_norm(const ComplexField& f, double h) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.u.size(); ++i) {
        s += f.u[i] * f.u[i] + f.v[i] * f.v[i];
    }
    return std::sqrt(h * s);
}

/// Cubic envelope nonlinearity F(B) = -(Q_r + i Q_i) |B|^2 B, componentwise.
inline ComplexField nonlinear_term(const ComplexField& state, const CfglCoefficients& c) {
    state.require_consistent();
    const std::size_t n = state.u.size();
    ComplexField out = ComplexField::zeros(static_cast<int>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const double u = state.u[i];
        const double v = state.v[i];
        const double abs2 = u * u + v * v;
        out.u[i] = -(c.q_r * u - c.q_i * v) * abs2;
        out.v[i] = -(c.q_i * u + c.q_r * v) * abs2;
    }
    return out;
}

/// Linear part of the coupled real system,
///   A = [[-P + gamma_r I, -gamma_i I], [gamma_i I, -P + gamma_r I]],
/// where P is the dense Riesz block scaled by P_r.
class BlockOperator {
public:
    BlockOperator(RieszOperatorMatrix p, double gamma_r, double gamma_i)
        : p_(std::move(p)), gamma_r_(gamma_r), gamma_i_(gamma_i) {}

    int block_size() const { return p_.size(); }
    int dimension() const { return 2 * p_.size(); }
    double gamma_r() const { return gamma_r_; }
    double gamma_i() const { return gamma_i_; }
    const RieszOperatorMatrix& riesz_block() const { return p_; }

    void apply(const ComplexField& in, ComplexField& out) const {
        in.require_consistent();
        if (in.size() != block_size()) {
            throw std::invalid_argument("BlockOperator::apply: field size mismatch");
        }
        const std::size_t n = in.u.size();
        out.u.resize(n);
        out.v.resize(n);
        p_.apply(in.u, out.u);
        p_.apply(in.v, out.v);
        for (std::size_t i = 0; i < n; ++i) {
            const double pu = out.u[i];
            const double pv = out.v[i];
            out.u[i] = -pu + gamma_r_ * in.u[i] - gamma_i_ * in.v[i];
            out.v[i] = gamma_i_ * in.u[i] - pv + gamma_r_ * in.v[i];
        }
    }

    ComplexField apply(const ComplexField& in) const {
        ComplexField out;
        apply(in, out);
        return out;
    }

    /// Dense 2n x 2n system matrix I - tau A.
    DenseMatrix time_step_system(double tau) const {
        const int n = block_size();
        DenseMatrix m(2 * n, 2 * n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const double pij = tau * p_.entry(i, j);
                m(i, j) = pij;
                m(n + i, n + j) = pij;
            }
            m(i, i) += 1.0 - tau * gamma_r_;
            m(n + i, n + i) += 1.0 - tau * gamma_r_;
            m(i, n + i) = tau * gamma_i_;
            m(n + i, i) = -tau * gamma_i_;
        }
        return m;
    }

private:
    RieszOperatorMatrix p_;
    double gamma_r_;
    double gamma_i_;
};

inline BlockOperator assemble_block_operator(const CfglCoefficients& coeffs,
                                             const FractionalOrder& order, const Grid& grid) {
    return BlockOperator(assemble_riesz_matrix(order, grid.h(), grid.interior(), coeffs.p_r),
                         coeffs.gamma_r, coeffs.gamma_i);
}

namespace detail {

inline std::vector<double> pack(const ComplexField& f) {
    std::vector<double> x;
    x.reserve(2 * f.u.size());
    x.insert(x.end(), f.u.begin(), f.u.end());
    x.insert(x.end(), f.v.begin(), f.v.end());
    return x;
}

inline ComplexField unpack(std::span<const double> x) {
    const std::size_t n = x.size() / 2;
    ComplexField f;
    f.u.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n));
    f.v.assign(x.begin() + static_cast<std::ptrdiff_t>(n), x.end());
    return f;
}

}  // namespace detail

/// One-time LU factorization of I - tau A for the semi-implicit scheme.
class SemiImplicitFactorization {
public:
    SemiImplicitFactorization(const BlockOperator& op, double tau)
        : tau_(tau), block_size_(op.block_size()), lu_(op.time_step_system(validated(tau))) {}

    double tau() const { return tau_; }
    int block_size() const { return block_size_; }
    const LuFactorization& lu() const { return lu_; }

private:
    static double validated(double tau) {
        if (!(tau > 0.0)) {
            throw std::invalid_argument("SemiImplicitFactorization: tau must be positive");
        }
        return tau;
    }

    double tau_;
    int block_size_;
    LuFactorization lu_;
};

inline SemiImplicitFactorization factor_semi_implicit_system(const BlockOperator& op,
                                                             double tau) {
    return SemiImplicitFactorization(op, tau);
}

/// B_{n+1} = (I - tau A)^{-1} (B_n + tau F(B_n)).
inline ComplexField step_semi_implicit(const ComplexField& state,
                                       const SemiImplicitFactorization& factorization,
                                       const CfglCoefficients& coeffs, double tau) {
    state.require_consistent();
    if (state.size() != factorization.block_size()) {
        throw std::invalid_argument("step_semi_implicit: field size mismatch");
    }
    if (tau != factorization.tau()) {
        throw std::invalid_argument("step_semi_implicit: tau differs from factored system");
    }
    const ComplexField f = nonlinear_term(state, coeffs);
    std::vector<double> rhs = detail::pack(state);
    const std::size_t n = state.u.size();
    for (std::size_t i = 0; i < n; ++i) {
        rhs[i] += tau * f.u[i];
        rhs[n + i] += tau * f.v[i];
    }
    factorization.lu().solve_in_place(rhs);
    return detail::unpack(rhs);
}

/// Reusable implicit-part solver for the theta scheme: holds the LU of
/// I - tau (1 - theta) A. No system is factored for theta == 1 (explicit).
class ThetaFactorization {
public:
    ThetaFactorization(const BlockOperator& op, double tau, double theta)
        : tau_(tau), theta_(theta), block_size_(op.block_size()) {
        if (!(tau > 0.0)) {
            throw std::invalid_argument("ThetaFactorization: tau must be positive");
        }
        if (!(theta >= 0.0 && theta <= 1.0)) {
            throw std::invalid_argument("ThetaFactorization: theta must lie in [0, 1]");
        }
        if (theta < 1.0) {
            lu_.emplace(op.time_step_system(tau * (1.0 - theta)));
        }
    }

    double tau() const { return tau_; }
    double theta() const { return theta_; }
    int block_size() const { return block_size_; }
    bool implicit() const { return lu_.has_value(); }
    const LuFactorization& lu() const { return *lu_; }

private:
    double tau_;
    double theta_;
    int block_size_;
    std::optional<LuFactorization> lu_;
};

/// One step of the theta scheme
///   (B_{n+1} - B_n)/tau = theta (A B_n + F(B_n))
///                        + (1-theta) (A B_{n+1} + F(B_{n+1})),
/// solved by fixed-point iteration on the nonlinear term. Convergence is
/// declared when the update-equation residual
///   || B_{n+1} - B_n - tau [theta (A B_n + F(B_n))
///                           + (1-theta) (A B_{n+1} + F(B_{n+1}))] ||_inf
/// drops to tol or below; otherwise a numerical error is raised.
inline ComplexField step_theta(const ComplexField& state, const BlockOperator& op,
                               const ThetaFactorization& factorization,
                               const CfglCoefficients& coeffs, double tol, int max_iters) {
    state.require_consistent();
    if (state.size() != op.block_size() || state.size() != factorization.block_size()) {
        throw std::invalid_argument("step_theta: field size mismatch");
    }
    if (!(tol > 0.0)) {
        throw std::invalid_argument("step_theta: tolerance must be positive");
    }
    if (max_iters < 1) {
        throw std::invalid_argument("step_theta: need at least one iteration");
    }
    const double tau = factorization.tau();
    const double theta = factorization.theta();
    const std::size_t n = state.u.size();

    const ComplexField a_state = op.apply(state);
    const ComplexField f_state = nonlinear_term(state, coeffs);

    // Explicit update; exact for theta == 1 and the predictor otherwise.
    ComplexField iterate = ComplexField::zeros(static_cast<int>(n));
    for (std::size_t i = 0; i < n; ++i) {
        iterate.u[i] = state.u[i] + tau * (a_state.u[i] + f_state.u[i]);
        iterate.v[i] = state.v[i] + tau * (a_state.v[i] + f_state.v[i]);
    }
    if (!factorization.implicit()) {
        return iterate;
    }

    std::vector<double> rhs(2 * n);
    const double w = tau * (1.0 - theta);
    double residual = 0.0;
    for (int m = 0; m < max_iters; ++m) {
        const ComplexField f_it = nonlinear_term(iterate, coeffs);
        for (std::size_t i = 0; i < n; ++i) {
            rhs[i] = state.u[i] + tau * theta * (a_state.u[i] + f_state.u[i]) + w * f_it.u[i];
            rhs[n + i] = state.v[i] + tau * theta * (a_state.v[i] + f_state.v[i]) + w * f_it.v[i];
        }
        factorization.lu().solve_in_place(rhs);
        ComplexField next = detail::unpack(rhs);

        const ComplexField a_next = op.apply(next);
        const ComplexField f_next = nonlinear_term(next, coeffs);
        residual = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double ru = next.u[i] - state.u[i] -
                              tau * (theta * (a_state.u[i] + f_state.u[i]) +
                                     (1.0 - theta) * (a_next.u[i] + f_next.u[i]));
            const double rv = next.v[i] - state.v[i] -
                              tau * (theta * (a_state.v[i] + f_state.v[i]) +
                                     (1.0 - theta) * (a_next.v[i] + f_next.v[i]));
            // std::max would silently drop NaN, so divergence to a non-finite
            // iterate must be trapped explicitly.
            if (!std::isfinite(ru) || !std::isfinite(rv)) {
                throw numerical_error(
                    "step_theta: fixed-point iteration diverged to a non-finite state");
            }
            residual = std::max(residual, std::max(std::abs(ru), std::abs(rv)));
        }
        iterate = std::move(next);
        if (residual <= tol) {
            return iterate;
        }
    }
    throw numerical_error("step_theta: fixed-point iteration stalled at residual " +
                          std::to_string(residual) + " after " + std::to_string(max_iters) +
                          " iterations (tol " + std::to_string(tol) + ")");
}

/// Convenience variant that factors the implicit system for this call only.
inline ComplexField step_theta(const ComplexField& state, const BlockOperator& op,
                               const CfglCoefficients& coeffs, double tau, double theta,
                               double tol, int max_iters) {
    return step_theta(state, op, ThetaFactorization(op, tau, theta), coeffs, tol, max_iters);
}

enum class Scheme { semi_implicit, theta };

struct SolverConfig {
    Scheme scheme = Scheme::semi_implicit;
    double tau = 1e-4;
    double t_final = 0.2;
    double theta = 0.5;
    int snapshot_stride = 1;
    double fixed_point_tol = 1e-10;
    int fixed_point_max_iters = 50;
};

struct StepRecord {
    int step = 0;
    double t = 0.0;
    double max_abs2 = 0.0;
    double l2_norm = 0.0;
    double localization = 0.0;
};

struct Snapshot {
    int step = 0;
    double t = 0.0;
    std::vector<double> abs2;
};

struct EvolutionObserver {
    std::function<void(const StepRecord&)> on_step;
    std::function<void(const Snapshot&)> on_snapshot;
};

struct Trajectory {
    std::vector<StepRecord> diagnostics;
    std::vector<Snapshot> snapshots;
    ComplexField final_state;
    int steps = 0;
    int factorization_count = 0;
};

/// Fixed-step evolution of an interior field. Factors the implicit system
/// exactly once, records |B|^2 diagnostics every step and snapshots every
/// `snapshot_stride` steps (plus the initial and final states), and aborts
/// with a numerical error when max |B|^2 exceeds 1e6 times its initial value.
inline Trajectory run_evolution(const Grid& grid, const CfglCoefficients& coeffs,
                                const FractionalOrder& order, const ComplexField& initial,
                                const SolverConfig& config,
                                const EvolutionObserver* observer = nullptr) {
    initial.require_consistent();
    if (initial.size() != grid.interior()) {
        throw std::invalid_argument("run_evolution: field does not match grid interior");
    }
    if (!(config.tau > 0.0) || !(config.t_final > 0.0)) {
        throw std::invalid_argument("run_evolution: tau and t_final must be positive");
    }
    if (config.snapshot_stride < 1) {
        throw std::invalid_argument("run_evolution: snapshot_stride must be >= 1");
    }
    const double steps_real = config.t_final / config.tau;
    const auto num_steps = static_cast<long long>(std::llround(steps_real));
    if (num_steps < 1 ||
        std::abs(static_cast<double>(num_steps) * config.tau - config.t_final) >
            1e-9 * std::max(1.0, config.t_final)) {
        throw std::invalid_argument("run_evolution: t_final must be an integer number of steps");
    }

    const BlockOperator op = assemble_block_operator(coeffs, order, grid);

    Trajectory traj;
    std::optional<SemiImplicitFactorization> semi;
    std::optional<ThetaFactorization> theta;
    if (config.scheme == Scheme::semi_implicit) {
        semi.emplace(op, config.tau);
        traj.factorization_count = 1;
    } else {
        theta.emplace(op, config.tau, config.theta);
        traj.factorization_count = theta->implicit() ? 1 : 0;
    }

    // Central-half window [L/4, 3L/4] for the localization diagnostic.
    const std::vector<double> xs = grid.interior_coordinates();
    const double lo = 0.25 * grid.length() - 1e-12 * grid.length();
    const double hi = 0.75 * grid.length() + 1e-12 * grid.length();
    std::vector<char> central(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        central[i] = (xs[i] >= lo && xs[i] <= hi) ? 1 : 0;
    }

    const auto record = [&](int step, double t, const ComplexField& f) {
        StepRecord rec;
        rec.step = step;
        rec.t = t;
        double total = 0.0;
        double inside = 0.0;
        double peak = 0.0;
        bool saw_nan = false;
        for (std::size_t i = 0; i < f.u.size(); ++i) {
            const double a2 = f.u[i] * f.u[i] + f.v[i] * f.v[i];
            total += a2;
            if (central[i] != 0) {
                inside += a2;
            }
            saw_nan = saw_nan || std::isnan(a2);
            peak = std::max(peak, a2);
        }
        if (saw_nan) {
            peak = std::numeric_limits<double>::quiet_NaN();
        }
        rec.max_abs2 = peak;
        rec.l2_norm = std::sqrt(grid.h() * total);
        rec.localization = total > 0.0 ? inside / total : 0.0;
        traj.diagnostics.push_back(rec);
        if (observer != nullptr && observer->on_step) {
            observer->on_step(rec);
        }
        return rec;
    };

    const auto snapshot = [&](int step, double t, const ComplexField& f) {
        Snapshot snap;
        snap.step = step;
        snap.t = t;
        snap.abs2.resize(f.u.size());
        for (std::size_t i = 0; i < f.u.size(); ++i) {
            snap.abs2[i] = f.u[i] * f.u[i] + f.v[i] * f.v[i];
        }
        if (observer != nullptr && observer->on_snapshot) {
            observer->on_snapshot(snap);
        }
        traj.snapshots.push_back(std::move(snap));
    };

    const double guard = 1e6 * max_abs2(initial);

    ComplexField state = initial;
    record(0, 0.0, state);
    snapshot(0, 0.0, state);

    const int total_steps = static_cast<int>(num_steps);
    traj.steps = total_steps;
    for (int step = 1; step <= total_steps; ++step) {
        const double t = config.tau * static_cast<double>(step);
        if (config.scheme == Scheme::semi_implicit) {
            state = step_semi_implicit(state, *semi, coeffs, config.tau);
        } else {
            state = step_theta(state, op, *theta, coeffs, config.fixed_point_tol,
                               config.fixed_point_max_iters);
        }
        const StepRecord rec = record(step, t, state);
        if (step % config.snapshot_stride == 0 || step == total_steps) {
            snapshot(step, t, state);
        }
        // The negated comparison also fires on NaN, so exploding and
        // non-finite states are both fatal.
        if (!(rec.max_abs2 <= guard)) {
            throw numerical_error("run_evolution: blow-up at t = " + std::to_string(t) +
                                  ", max |B|^2 = " + std::to_string(rec.max_abs2) +
                                  (std::isnan(rec.max_abs2) ? " is non-finite"
                                                            : " exceeds 1e6 x initial"));
        }
    }
    traj.final_state = std::move(state);
    return traj;
}

}  // namespace fgl
