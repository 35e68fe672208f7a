#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fgl/fractional_order.hpp"
#include "fgl/special_functions.hpp"

namespace fgl {

/// Parameters of the slow-envelope reduction: natural frequency squared,
/// Lienard damping/nonlinearity coefficients, fast-slow ratio and the
/// long-range coupling strengths.
struct LienardParameters {
    double omega0_sq = 0.032;
    double lambda1 = 0.01;
    double lambda3 = 0.023;
    double eta0 = 0.1;
    double eta1 = 0.001;
    double eta2 = 0.15;
    double r = 0.008;
    double c0 = 0.001;
    double c1 = 0.001;
};

inline void validate(const LienardParameters& p) {
    if (!(p.omega0_sq > 0.0)) {
        throw std::domain_error("LienardParameters: omega0_sq must be positive");
    }
    if (!(p.r > 0.0)) {
        throw std::domain_error("LienardParameters: fast-slow ratio r must be positive");
    }
}

/// Envelope equation coefficients: dB/dt = (gamma_r + i gamma_i) B
/// + P_r d^alpha B / d|x|^alpha - (Q_r + i Q_i) |B|^2 B.
struct CfglCoefficients {
    double gamma_r = 0.0;
    double gamma_i = 0.0;
    double p_r = 0.0;
    double q_r = 0.0;
    double q_i = 0.0;
};

/// Carrier wavenumber, its linear frequency and a phase offset.
struct CarrierWave {
    double k = 0.0;
    double omega = 0.0;
    double theta0 = 0.0;
};

/// Linear dispersion Omega(k) = sqrt(Omega_0^2 + c_0 a_alpha |k|^alpha).
///
/// a_alpha < 0, so the radicand crosses zero at a finite cutoff wavenumber;
/// beyond it the frequency is imaginary and a domain error names the cutoff.
inline double dispersion_omega(double k, const LienardParameters& params,
                               const FractionalOrder& order) {
    validate(params);
    const double a = infrared_coefficient(order);
    const double coupling = params.c0 * a;
    const double radicand = params.omega0_sq + coupling * std::pow(std::abs(k), order.value());
    if (radicand <= 0.0) {
        std::string msg = "dispersion_omega: imaginary frequency at |k| = " +
                          std::to_string(std::abs(k));
        if (coupling < 0.0) {
            const double cutoff = std::pow(params.omega0_sq / (-coupling), 1.0 / order.value());
            msg += " (real branch ends at |k| = " + std::to_string(cutoff) + ")";
        }
        throw std::domain_error(msg);
    }
    return std::sqrt(radicand);
}

/// Envelope coefficients for a carrier of frequency omega > 0.
inline CfglCoefficients derive_coefficients(const LienardParameters& p, double omega,
                                            const FractionalOrder& order) {
    validate(p);
    if (!(omega > 0.0)) {
        throw std::domain_error("derive_coefficients: carrier frequency must be positive");
    }
    const double omega_sq = omega * omega;
    const double denom = p.r * p.r + omega_sq;
    CfglCoefficients c;
    c.gamma_r = p.lambda3 * p.omega0_sq / (2.0 * denom) - 0.5 * p.eta0;
    c.gamma_i = -p.r * p.lambda3 * p.omega0_sq / (2.0 * omega * denom);
    c.p_r = 0.5 * p.c1 * infrared_coefficient(order);
    c.q_r = 0.5 * p.eta2 + p.eta1 * p.lambda1 / p.omega0_sq;
    c.q_i = (0.5 * p.eta2 - omega_sq * p.eta1 * p.eta1 / (2.0 * p.omega0_sq) -
             p.lambda1 * p.lambda1 / p.omega0_sq) /
            omega;
    return c;
}

inline CarrierWave make_carrier(double k, const LienardParameters& params,
                                const FractionalOrder& order, double theta0 = 0.0) {
    return CarrierWave{k, dispersion_omega(k, params, order), theta0};
}

/// Amplitude of the exact plane-wave solution,
/// sqrt((gamma_r - P_r |k|^alpha) / Q_r). Fails when the radicand is
/// negative (no real wave at this wavenumber) or Q_r == 0.
inline double plane_wave_amplitude(const CfglCoefficients& c, double k,
                                   const FractionalOrder& order) {
    if (c.q_r == 0.0) {
        throw std::domain_error("plane_wave_amplitude: Q_r must be nonzero");
    }
    const double radicand = (c.gamma_r - c.p_r * std::pow(std::abs(k), order.value())) / c.q_r;
    if (radicand < 0.0) {
        throw std::domain_error("plane_wave_amplitude: no real amplitude at |k| = " +
                                std::to_string(std::abs(k)) + " (squared amplitude " +
                                std::to_string(radicand) + ")");
    }
    return std::sqrt(radicand);
}

/// Nonlinear frequency of the plane wave:
/// omega_alpha(k) = (Q_i gamma_r - Q_r gamma_i - Q_i P_r |k|^alpha) / Q_r.
inline double plane_wave_frequency(const CfglCoefficients& c, double k,
                                   const FractionalOrder& order) {
    if (c.q_r == 0.0) {
        throw std::domain_error("plane_wave_frequency: Q_r must be nonzero");
    }
    const double ka = std::pow(std::abs(k), order.value());
    return (c.q_i * c.gamma_r - c.q_r * c.gamma_i - c.q_i * c.p_r * ka) / c.q_r;
}

/// B(x, t) = A exp(i (k x - omega_alpha(k) t + theta0)).
inline std::complex<double> evaluate_plane_wave(const CfglCoefficients& c,
                                                const CarrierWave& carrier, double x, double t,
                                                const FractionalOrder& order) {
    const double amplitude = plane_wave_amplitude(c, carrier.k, order);
    const double omega = plane_wave_frequency(c, carrier.k, order);
    return std::polar(amplitude, carrier.k * x - omega * t + carrier.theta0);
}

/// Modulational stability test of the plane wave at wavenumber k:
/// 0 < gain < ratio < 3 * gain with gain = gamma_r - P_r |k|^alpha and
/// ratio = gamma_i / Q_i, all inequalities strict.
struct StabilityReport {
    double gain = 0.0;
    double ratio = 0.0;
    bool gain_positive = false;
    bool ratio_above_gain = false;
    bool ratio_below_triple_gain = false;
    bool stable = false;
};

inline StabilityReport check_plane_wave_stability(const CfglCoefficients& c, double k,
                                                  const FractionalOrder& order) {
    if (c.q_i == 0.0) {
        throw std::domain_error("check_plane_wave_stability: undefined for Q_i == 0");
    }
    StabilityReport rep;
    rep.gain = c.gamma_r - c.p_r * std::pow(std::abs(k), order.value());
    rep.ratio = c.gamma_i / c.q_i;
    rep.gain_positive = rep.gain > 0.0;
    rep.ratio_above_gain = rep.ratio > rep.gain;
    rep.ratio_below_triple_gain = rep.ratio < 3.0 * rep.gain;
    rep.stable = rep.gain_positive && rep.ratio_above_gain && rep.ratio_below_triple_gain;
    return rep;
}

/// Solitary-pulse initial profile sampled on the given coordinates
/// (coordinates are relative to the pulse center):
///
///   B(x) = B0 (e^{-k x} + cos(2 mu k x) e^{-k x} - i sin(2 mu k x) e^{-k x})
///          / (2 cosh(2 k x) + cos(2 mu k x)),
///   mu = beta + sqrt(2 + beta^2),  beta = 3 Q_r / (2 Q_i).
///
/// For |k x| large the cosh-dominated form is used so the tails evaluate to
/// clean zeros instead of inf/inf.
inline std::vector<std::complex<double>> solitary_initial_condition(
    std::span<const double> coordinates, double b0, double k, const CfglCoefficients& c) {
    if (coordinates.empty()) {
        throw std::invalid_argument("solitary_initial_condition: empty coordinate set");
    }
    if (c.q_i == 0.0) {
        throw std::domain_error("solitary_initial_condition: chirp undefined for Q_i == 0");
    }
    const double beta = 1.5 * c.q_r / c.q_i;
    const double mu = beta + std::sqrt(2.0 + beta * beta);

    std::vector<std::complex<double>> out;
    out.reserve(coordinates.size());
    for (double x : coordinates) {
        const double kx = k * x;
        const double phase = 2.0 * mu * kx;
        const double cp = std::cos(phase);
        const double sp = std::sin(phase);
        double re;
        double im;
        if (std::abs(kx) > 300.0) {
            // 2 cosh(2kx) ~ e^{2|kx|}; relative error below e^-600.
            const double decay = std::exp(-kx - 2.0 * std::abs(kx));
            re = b0 * (1.0 + cp) * decay;
            im = -b0 * sp * decay;
        } else {
            const double denom = 2.0 * std::cosh(2.0 * kx) + cp;
            const double envelope = b0 * std::exp(-kx) / denom;
            re = envelope * (1.0 + cp);
            im = -envelope * sp;
        }
        out.emplace_back(re, im);
    }
    return out;
}

}  // namespace fgl
