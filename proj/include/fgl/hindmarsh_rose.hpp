#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "fgl/errors.hpp"

namespace fgl {

/// Membrane model constants plus external drive. `negate_coupling` flips the
/// long-range term to the diffusive sign convention.
struct HrParameters {
    double a = 1.0;
    double b = 3.0;
    double c = 1.0;
    double d = 5.0;
    double r = 0.008;
    double s = 4.0;
    double e = 1.0;
    double u0 = -1.6;
    double current = 0.0;
    bool negate_coupling = false;
};

inline void validate(const HrParameters& p) {
    if (!(p.r > 0.0)) {
        throw std::domain_error("HrParameters: slow-variable rate r must be positive");
    }
}

/// Power-law coupling K / d^(alpha+1) tabulated for chain distances
/// 1 .. n-1. Positive, strictly decreasing in d for K > 0.
class CouplingKernel {
public:
    CouplingKernel(double strength, double alpha, int n)
        : strength_(strength), alpha_(alpha) {
        if (n < 1) {
            throw std::invalid_argument("CouplingKernel: need at least one node");
        }
        if (!(alpha > 0.0)) {
            throw std::domain_error("CouplingKernel: exponent alpha must be positive");
        }
        table_.resize(static_cast<std::size_t>(n) - 1);
        for (int d = 1; d < n; ++d) {
            table_[static_cast<std::size_t>(d) - 1] =
                strength / std::pow(static_cast<double>(d), alpha + 1.0);
        }
    }

    double strength() const { return strength_; }
    double alpha() const { return alpha_; }
    int max_distance() const { return static_cast<int>(table_.size()); }

    double at(int distance) const {
        if (distance < 1 || distance > max_distance()) {
            throw std::out_of_range("CouplingKernel::at: distance outside chain");
        }
        return table_[static_cast<std::size_t>(distance) - 1];
    }

private:
    double strength_;
    double alpha_;
    std::vector<double> table_;
};

inline CouplingKernel build_kernel(double strength, double alpha, int n) {
    return CouplingKernel(strength, alpha, n);
}

/// Membrane potentials, recovery and adaptation variables of the chain.
struct HrNetworkState {
    std::vector<double> u;
    std::vector<double> v;
    std::vector<double> w;
    double t = 0.0;

    int size() const { return static_cast<int>(u.size()); }

    void require_consistent() const {
        if (u.size() != v.size() || u.size() != w.size()) {
            throw std::invalid_argument("HrNetworkState: component size mismatch");
        }
        if (u.empty()) {
            throw std::invalid_argument("HrNetworkState: empty network");
        }
    }
};

struct HrDerivatives {
    std::vector<double> du;
    std::vector<double> dv;
    std::vector<double> dw;
};

/// du_n = v_n - a u_n^3 + b u_n^2 - w_n + I + sum_{m != n} k(|n-m|)(u_n - u_m)
/// dv_n = c - d u_n^2 - e v_n
/// dw_n = r (s (u_n - u0) - w_n)
inline void hr_rhs(const HrNetworkState& state, const HrParameters& params,
                   const CouplingKernel& kernel, HrDerivatives& out) {
    state.require_consistent();
    validate(params);
    const int n = state.size();
    if (kernel.max_distance() < n - 1) {
        throw std::invalid_argument("hr_rhs: kernel table shorter than the chain");
    }
    out.du.resize(static_cast<std::size_t>(n));
    out.dv.resize(static_cast<std::size_t>(n));
    out.dw.resize(static_cast<std::size_t>(n));
    const double sign = params.negate_coupling ? -1.0 : 1.0;
    for (int i = 0; i < n; ++i) {
        const double u = state.u[static_cast<std::size_t>(i)];
        double coupling = 0.0;
        for (int m = 0; m < n; ++m) {
            if (m == i) {
                continue;
            }
            const int dist = m > i ? m - i : i - m;
            coupling += kernel.at(dist) * (u - state.u[static_cast<std::size_t>(m)]);
        }
        out.du[static_cast<std::size_t>(i)] = state.v[static_cast<std::size_t>(i)] -
                                              params.a * u * u * u + params.b * u * u -
                                              state.w[static_cast<std::size_t>(i)] +
                                              params.current + sign * coupling;
        out.dv[static_cast<std::size_t>(i)] =
            params.c - params.d * u * u - params.e * state.v[static_cast<std::size_t>(i)];
        out.dw[static_cast<std::size_t>(i)] =
            params.r * (params.s * (u - params.u0) - state.w[static_cast<std::size_t>(i)]);
    }
}

/// Classic fourth-order Runge-Kutta step. Rejects non-finite results.
inline HrNetworkState rk4_step(const HrNetworkState& state, const HrParameters& params,
                               const CouplingKernel& kernel, double dt) {
    if (!(dt > 0.0)) {
        throw std::invalid_argument("rk4_step: dt must be positive");
    }
    state.require_consistent();
    const std::size_t n = state.u.size();

    HrDerivatives k1;
    HrDerivatives k2;
    HrDerivatives k3;
    HrDerivatives k4;
    HrNetworkState stage = state;

    hr_rhs(state, params, kernel, k1);
    for (std::size_t i = 0; i < n; ++i) {
        stage.u[i] = state.u[i] + 0.5 * dt * k1.du[i];
        stage.v[i] = state.v[i] + 0.5 * dt * k1.dv[i];
        stage.w[i] = state.w[i] + 0.5 * dt * k1.dw[i];
    }
    hr_rhs(stage, params, kernel, k2);
    for (std::size_t i = 0; i < n; ++i) {
        stage.u[i] = state.u[i] + 0.5 * dt * k2.du[i];
        stage.v[i] = state.v[i] + 0.5 * dt * k2.dv[i];
        stage.w[i] = state.w[i] + 0.5 * dt * k2.dw[i];
    }
    hr_rhs(stage, params, kernel, k3);
    for (std::size_t i = 0; i < n; ++i) {
        stage.u[i] = state.u[i] + dt * k3.du[i];
        stage.v[i] = state.v[i] + dt * k3.dv[i];
        stage.w[i] = state.w[i] + dt * k3.dw[i];
    }
    hr_rhs(stage, params, kernel, k4);

    HrNetworkState next = state;
    next.t = state.t + dt;
    const double sixth = dt / 6.0;
    for (std::size_t i = 0; i < n; ++i) {
        next.u[i] = state.u[i] + sixth * (k1.du[i] + 2.0 * k2.du[i] + 2.0 * k3.du[i] + k4.du[i]);
        next.v[i] = state.v[i] + sixth * (k1.dv[i] + 2.0 * k2.dv[i] + 2.0 * k3.dv[i] + k4.dv[i]);
        next.w[i] = state.w[i] + sixth * (k1.dw[i] + 2.0 * k2.dw[i] + 2.0 * k3.dw[i] + k4.dw[i]);
        if (!std::isfinite(next.u[i]) || !std::isfinite(next.v[i]) ||
            !std::isfinite(next.w[i])) {
            throw numerical_error("rk4_step: non-finite state at t = " + std::to_string(next.t));
        }
    }
    return next;
}

/// Upward threshold crossings count as spikes when at least `min_gap_steps`
/// steps have passed since the previous spike of the same neuron.
struct SpikeDetection {
    double threshold = 1.0;
    int min_gap_steps = 10;
};

struct HrTimeSeries {
    std::vector<double> times;
    std::vector<std::vector<double>> u_records;
    std::vector<int> spike_counts;
    HrNetworkState final_state;
    int steps = 0;
};

/// Fixed-step integration with membrane-potential recording every
/// `record_stride` steps (plus initial and final states). Aborts with a
/// numerical error when max |u| exceeds 1e3.
inline HrTimeSeries simulate_network(const HrNetworkState& initial, const HrParameters& params,
                                     const CouplingKernel& kernel, double dt, double t_final,
                                     int record_stride,
                                     const SpikeDetection& spikes = SpikeDetection{}) {
    initial.require_consistent();
    validate(params);
    if (!(dt > 0.0) || !(t_final > 0.0)) {
        throw std::invalid_argument("simulate_network: dt and t_final must be positive");
    }
    if (record_stride < 1) {
        throw std::invalid_argument("simulate_network: record_stride must be >= 1");
    }
    if (spikes.min_gap_steps < 1) {
        throw std::invalid_argument("simulate_network: spike gap must be >= 1 step");
    }
    const auto num_steps = static_cast<long long>(std::llround(t_final / dt));
    if (num_steps < 1 || std::abs(static_cast<double>(num_steps) * dt - t_final) >
                             1e-9 * std::max(1.0, t_final)) {
        throw std::invalid_argument("simulate_network: t_final must be an integer number of steps");
    }

    const int n = initial.size();
    HrTimeSeries series;
    series.spike_counts.assign(static_cast<std::size_t>(n), 0);
    series.steps = static_cast<int>(num_steps);

    const auto record = [&](const HrNetworkState& s) {
        series.times.push_back(s.t);
        series.u_records.push_back(s.u);
    };

    std::vector<double> prev_u = initial.u;
    std::vector<long long> last_spike(static_cast<std::size_t>(n), -1);

    HrNetworkState state = initial;
    record(state);
    for (long long step = 1; step <= num_steps; ++step) {
        state = rk4_step(state, params, kernel, dt);
        state.t = dt * static_cast<double>(step) + initial.t;

        double peak = 0.0;
        for (int i = 0; i < n; ++i) {
            const double cur = state.u[static_cast<std::size_t>(i)];
            peak = std::max(peak, std::abs(cur));
            if (prev_u[static_cast<std::size_t>(i)] < spikes.threshold &&
                cur >= spikes.threshold) {
                const long long last = last_spike[static_cast<std::size_t>(i)];
                if (last < 0 || step - last >= spikes.min_gap_steps) {
                    ++series.spike_counts[static_cast<std::size_t>(i)];
                    last_spike[static_cast<std::size_t>(i)] = step;
                }
            }
            prev_u[static_cast<std::size_t>(i)] = cur;
        }
        if (step % record_stride == 0 || step == num_steps) {
            record(state);
        }
        if (peak > 1e3) {
            throw numerical_error("simulate_network: membrane potential diverged at t = " +
                                  std::to_string(state.t));
        }
    }
    series.final_state = std::move(state);
    return series;
}

}  // namespace fgl
