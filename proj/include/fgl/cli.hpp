#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstddef>
#include <exception>
#include <filesystem>
#include <fstream>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "fgl/analysis.hpp"
#include "fgl/cfgl.hpp"
#include "fgl/config.hpp"
#include "fgl/csv.hpp"
#include "fgl/errors.hpp"
#include "fgl/hindmarsh_rose.hpp"
#include "fgl/riesz.hpp"
#include "fgl/solver.hpp"

namespace fgl {

class StopWatch {
public:
    StopWatch() : start_(std::chrono::steady_clock::now()) {}
    void reset() { start_ = std::chrono::steady_clock::now(); }
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

namespace detail {

inline void ensure_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw io_error("cannot create output directory " + dir.string());
    }
}

inline void write_resolved_config(const RunConfig& cfg, const std::filesystem::path& dir) {
    const std::filesystem::path path = dir / "config.resolved";
    std::ofstream out(path);
    if (!out) {
        throw io_error("cannot open " + path.string() + " for writing");
    }
    out << echo_config(cfg);
    out.flush();
    if (!out) {
        throw io_error("write failed on " + path.string());
    }
}

}  // namespace detail

/// Model objects shared by the envelope commands, built from one resolved
/// configuration (gamma_i_mode must be a concrete mode, not "both").
struct EnvelopeSetup {
    FractionalOrder order;
    LienardParameters params;
    double omega;
    CfglCoefficients coeffs;
    Grid grid;
    ComplexField initial;
};

inline EnvelopeSetup prepare_envelope_run(const RunConfig& cfg) {
    const FractionalOrder order(cfg.alpha);
    const LienardParameters params{cfg.omega0_sq, cfg.lambda1, cfg.lambda3, cfg.eta0,
                                   cfg.eta1,      cfg.eta2,    cfg.fast_slow_ratio,
                                   cfg.c0,        cfg.c1};
    double omega = 0.0;
    if (cfg.omega_override) {
        omega = *cfg.omega_override;
    } else {
        try {
            omega = dispersion_omega(cfg.carrier_k, params, order);
        } catch (const std::domain_error& e) {
            throw config_error(std::string("carrier frequency is not real: ") + e.what());
        }
    }
    CfglCoefficients coeffs = derive_coefficients(params, omega, order);
    if (cfg.gamma_i_mode == "zero") {
        coeffs.gamma_i = 0.0;
    }

    const Grid grid(cfg.domain_length, cfg.grid_m);
    std::vector<double> xs = grid.interior_coordinates();
    const double center = *cfg.pulse_center;
    for (double& x : xs) {
        x -= center;
    }
    const auto profile = solitary_initial_condition(xs, cfg.b0, cfg.carrier_k, coeffs);
    return EnvelopeSetup{order, params, omega, coeffs, grid,
                         ComplexField::from_complex(profile)};
}

inline SolverConfig solver_config_from(const RunConfig& cfg) {
    SolverConfig sc;
    sc.scheme = cfg.scheme == "semi_implicit" ? Scheme::semi_implicit : Scheme::theta;
    sc.tau = cfg.time_step;
    sc.t_final = cfg.t_final;
    sc.theta = cfg.theta;
    sc.snapshot_stride = cfg.snapshot_stride;
    sc.fixed_point_tol = cfg.fixed_point_tol;
    sc.fixed_point_max_iters = cfg.fixed_point_max_iters;
    return sc;
}

/// Tabulates the linear dispersion branches over a wavenumber grid; columns
/// beyond their real-branch cutoff hold empty cells.
inline void cmd_dispersion(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    detail::ensure_directory(out_dir);
    detail::write_resolved_config(cfg, out_dir);

    const LienardParameters params{cfg.omega0_sq, cfg.lambda1, cfg.lambda3, cfg.eta0,
                                   cfg.eta1,      cfg.eta2,    cfg.fast_slow_ratio,
                                   cfg.c0,        cfg.c1};
    std::vector<FractionalOrder> orders;
    orders.reserve(cfg.dispersion_alphas.size());
    std::vector<std::string> header = {"k"};
    for (double a : cfg.dispersion_alphas) {
        orders.emplace_back(a);
        header.push_back("omega_alpha_" + format_short(a));
    }

    CsvFile csv((out_dir / "dispersion.csv").string());
    csv.row(header);
    for (double k : linspace(cfg.dispersion_k_min, cfg.dispersion_k_max, cfg.dispersion_k_count)) {
        std::vector<std::string> cells = {format_full(k)};
        for (const auto& order : orders) {
            try {
                cells.push_back(format_full(dispersion_omega(k, params, order)));
            } catch (const std::domain_error&) {
                cells.emplace_back();
            }
        }
        csv.row(cells);
    }
    csv.flush();
}

namespace detail {

inline void run_single_evolution(const RunConfig& cfg, const std::filesystem::path& dir) {
    ensure_directory(dir);
    write_resolved_config(cfg, dir);

    const EnvelopeSetup setup = prepare_envelope_run(cfg);
    const std::vector<double> xs = setup.grid.interior_coordinates();

    CsvFile diagnostics((dir / "diagnostics.csv").string());
    diagnostics.row({"t", "max_abs2", "l2_norm", "localization"});

    CsvFile snapshots((dir / "snapshots.csv").string());
    std::vector<std::string> header = {"t"};
    for (double x : xs) {
        header.push_back("x_" + format_short(x));
    }
    snapshots.row(header);

    EvolutionObserver observer;
    observer.on_step = [&diagnostics](const StepRecord& rec) {
        diagnostics.row({format_full(rec.t), format_full(rec.max_abs2),
                         format_full(rec.l2_norm), format_full(rec.localization)});
    };
    observer.on_snapshot = [&snapshots](const Snapshot& snap) {
        std::vector<std::string> cells;
        cells.reserve(snap.abs2.size() + 1);
        cells.push_back(format_full(snap.t));
        for (double a2 : snap.abs2) {
            cells.push_back(format_full(a2));
        }
        snapshots.row(cells);
    };

    try {
        run_evolution(setup.grid, setup.coeffs, setup.order, setup.initial,
                      solver_config_from(cfg), &observer);
    } catch (...) {
        diagnostics.flush();
        snapshots.flush();
        throw;
    }
    diagnostics.flush();
    snapshots.flush();
}

}  // namespace detail

/// Evolves the solitary initial profile. A repeated --alpha flag sweeps
/// orders and gamma_i_mode = both runs both rotation treatments; when more
/// than one combination runs, each lands in its own subdirectory.
inline void cmd_evolve(const RunConfig& cfg, const std::filesystem::path& out_dir,
                       const std::vector<double>& alpha_sweep = {}, int jobs = 1) {
    detail::ensure_directory(out_dir);

    std::vector<double> alphas = alpha_sweep.empty() ? std::vector<double>{cfg.alpha}
                                                     : alpha_sweep;
    for (double a : alphas) {
        require_envelope_alpha(a, "alpha");
    }
    std::vector<std::string> modes;
    if (cfg.gamma_i_mode == "both") {
        modes = {"zero", "derived"};
    } else {
        modes = {cfg.gamma_i_mode};
    }

    struct Run {
        RunConfig cfg;
        std::filesystem::path dir;
    };
    std::vector<Run> runs;
    for (double a : alphas) {
        for (const auto& mode : modes) {
            RunConfig local = cfg;
            local.alpha = a;
            local.gamma_i_mode = mode;
            std::string name = "alpha_" + format_short(a);
            if (modes.size() > 1) {
                name += "_gi_" + mode;
            }
            const bool single = alphas.size() == 1 && modes.size() == 1;
            runs.push_back(Run{local, single ? out_dir : out_dir / name});
        }
    }

    if (jobs <= 1 || runs.size() == 1) {
        for (const auto& run : runs) {
            detail::run_single_evolution(run.cfg, run.dir);
        }
        return;
    }

    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> failures(runs.size());
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(jobs), runs.size());
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= runs.size()) {
                    return;
                }
                try {
                    detail::run_single_evolution(runs[i].cfg, runs[i].dir);
                } catch (...) {
                    failures[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    for (const auto& failure : failures) {
        if (failure) {
            std::rethrow_exception(failure);
        }
    }
}

/// Integrates the neuron chain from its rest state (optionally perturbed)
/// and records membrane potentials and per-neuron spike counts.
inline void cmd_hr_sim(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    detail::ensure_directory(out_dir);
    detail::write_resolved_config(cfg, out_dir);

    HrParameters params;
    params.a = cfg.hr_a;
    params.b = cfg.hr_b;
    params.c = cfg.hr_c;
    params.d = cfg.hr_d;
    params.r = cfg.hr_r;
    params.s = cfg.hr_s;
    params.e = cfg.hr_e;
    params.u0 = cfg.hr_u0;
    params.current = cfg.hr_current;
    params.negate_coupling = cfg.hr_diffusive_coupling;

    const CouplingKernel kernel = build_kernel(cfg.hr_coupling_k, cfg.hr_alpha, cfg.hr_n);

    HrNetworkState initial;
    const auto n = static_cast<std::size_t>(cfg.hr_n);
    initial.u.assign(n, cfg.hr_u0);
    initial.v.assign(n, (cfg.hr_c - cfg.hr_d * cfg.hr_u0 * cfg.hr_u0) / cfg.hr_e);
    initial.w.assign(n, 0.0);
    if (cfg.hr_perturb_mode == "bump") {
        initial.u[static_cast<std::size_t>(cfg.hr_perturb_neuron)] += cfg.hr_perturb_amplitude;
    } else if (cfg.hr_perturb_mode == "random") {
        std::mt19937_64 gen(cfg.seed);
        std::uniform_real_distribution<double> dist(-cfg.hr_perturb_amplitude,
                                                    cfg.hr_perturb_amplitude);
        for (auto& u : initial.u) {
            u += dist(gen);
        }
    }

    const SpikeDetection spikes{cfg.hr_spike_threshold, cfg.hr_min_spike_gap_steps};
    const HrTimeSeries series = simulate_network(initial, params, kernel, cfg.hr_dt,
                                                 cfg.hr_t_final, cfg.hr_record_stride, spikes);

    CsvFile u_series((out_dir / "u_series.csv").string());
    std::vector<std::string> header = {"t"};
    for (int i = 0; i < cfg.hr_n; ++i) {
        header.push_back("u_" + std::to_string(i));
    }
    u_series.row(header);
    for (std::size_t rec = 0; rec < series.times.size(); ++rec) {
        std::vector<std::string> cells = {format_full(series.times[rec])};
        for (double u : series.u_records[rec]) {
            cells.push_back(format_full(u));
        }
        u_series.row(cells);
    }
    u_series.flush();

    CsvFile spikes_csv((out_dir / "spikes.csv").string());
    spikes_csv.row({"neuron", "count"});
    for (int i = 0; i < cfg.hr_n; ++i) {
        spikes_csv.row({std::to_string(i),
                        std::to_string(series.spike_counts[static_cast<std::size_t>(i)])});
    }
    spikes_csv.flush();
}

struct ConvergenceSummary {
    std::vector<double> space_errors;
    std::vector<double> semi_errors;
    std::vector<double> theta_errors;
    std::vector<double> gap_values;
    double space_fitted = 0.0;
    double semi_fitted = 0.0;
    double theta_fitted = 0.0;
    double gap_fitted = 0.0;
};

namespace detail {

/// Infinitely smooth bump supported on the middle half of (0, length).
inline double bump_profile(double x, double length) {
    const double s = (x - 0.5 * length) / (0.25 * length);
    if (std::abs(s) >= 1.0) {
        return 0.0;
    }
    return std::exp(-1.0 / (1.0 - s * s));
}

inline ComplexField conv_initial_field(const Grid& grid) {
    const std::vector<double> xs = grid.interior_coordinates();
    ComplexField f = ComplexField::zeros(grid.interior());
    const double b = grid.length();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double x = xs[i];
        const double du = x - 0.4 * b;
        const double dv = x - 0.6 * b;
        f.u[i] = std::exp(-du * du / 4.0);
        f.v[i] = 0.5 * std::exp(-dv * dv / 6.0);
    }
    return f;
}

inline double field_l2_diff(const ComplexField& a, const ComplexField& b, double h) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.u.size(); ++i) {
        const double du = a.u[i] - b.u[i];
        const double dv = a.v[i] - b.v[i];
        s += du * du + dv * dv;
    }
    return std::sqrt(h * s);
}

}  // namespace detail

/// Self-convergence measurements: the Riesz operator on a smooth bump over a
/// grid ladder, both time integrators against fine-step references, and the
/// gap between the two integrators at matched steps.
inline ConvergenceSummary cmd_convergence(const RunConfig& cfg,
                                          const std::filesystem::path& out_dir) {
    detail::ensure_directory(out_dir);
    detail::write_resolved_config(cfg, out_dir);

    ConvergenceSummary summary;
    const FractionalOrder order(cfg.conv_alpha);
    const double b = cfg.conv_domain_length;

    // Space: apply the operator on each rung and compare at the rung's own
    // nodes with a fine reference grid (rung nodes are nested in it).
    std::vector<double> hs;
    {
        const int m_ref = cfg.conv_space_m_ref;
        const Grid ref_grid(b, m_ref);
        std::vector<double> ref_field(static_cast<std::size_t>(ref_grid.interior()));
        {
            const std::vector<double> xs = ref_grid.interior_coordinates();
            for (std::size_t i = 0; i < xs.size(); ++i) {
                ref_field[i] = detail::bump_profile(xs[i], b);
            }
        }
        const RieszWeights ref_weights(order, ref_grid.interior());
        const std::vector<double> ref_apply = apply_riesz(ref_weights, ref_field, ref_grid.h());

        for (int m : cfg.conv_space_m) {
            const Grid grid(b, m);
            const std::vector<double> xs = grid.interior_coordinates();
            std::vector<double> field(xs.size());
            for (std::size_t i = 0; i < xs.size(); ++i) {
                field[i] = detail::bump_profile(xs[i], b);
            }
            const RieszWeights weights(order, grid.interior());
            const std::vector<double> applied = apply_riesz(weights, field, grid.h());

            const int ratio = m_ref / m;
            double err = 0.0;
            for (int i = 1; i < m; ++i) {
                const double ref_value =
                    ref_apply[static_cast<std::size_t>(i * ratio) - 1];
                err = std::max(err,
                               std::abs(applied[static_cast<std::size_t>(i) - 1] - ref_value));
            }
            hs.push_back(grid.h());
            summary.space_errors.push_back(err);
        }
        summary.space_fitted = fitted_order(hs, summary.space_errors);
    }

    // Time: synthetic coefficients, Gaussian initial data, final-state error
    // against a fine-step reference computed with the same scheme.
    const Grid grid(b, cfg.conv_m);
    const CfglCoefficients coeffs{cfg.conv_gamma_r, cfg.conv_gamma_i, cfg.conv_p_r,
                                  cfg.conv_q_r, cfg.conv_q_i};
    const ComplexField initial = detail::conv_initial_field(grid);

    const auto run_final = [&](Scheme scheme, double tau) {
        SolverConfig sc;
        sc.scheme = scheme;
        sc.tau = tau;
        sc.t_final = cfg.conv_t_final;
        sc.theta = cfg.theta;
        sc.snapshot_stride = 1 << 30;  // endpoints only
        sc.fixed_point_tol = cfg.conv_fixed_point_tol;
        sc.fixed_point_max_iters = cfg.fixed_point_max_iters;
        return run_evolution(grid, coeffs, order, initial, sc).final_state;
    };

    const ComplexField semi_ref = run_final(Scheme::semi_implicit, cfg.conv_tau_ref);
    const ComplexField theta_ref = run_final(Scheme::theta, cfg.conv_tau_ref);
    for (double tau : cfg.conv_tau) {
        const ComplexField semi_final = run_final(Scheme::semi_implicit, tau);
        const ComplexField theta_final = run_final(Scheme::theta, tau);
        summary.semi_errors.push_back(detail::field_l2_diff(semi_final, semi_ref, grid.h()));
        summary.theta_errors.push_back(detail::field_l2_diff(theta_final, theta_ref, grid.h()));
        summary.gap_values.push_back(detail::field_l2_diff(semi_final, theta_final, grid.h()));
    }
    summary.semi_fitted = fitted_order(cfg.conv_tau, summary.semi_errors);
    summary.theta_fitted = fitted_order(cfg.conv_tau, summary.theta_errors);
    summary.gap_fitted = fitted_order(cfg.conv_tau, summary.gap_values);

    CsvFile csv((out_dir / "convergence.csv").string());
    csv.row({"study", "param", "error", "order", "fitted_order"});
    const auto emit = [&csv](const std::string& study, std::span<const double> params,
                             std::span<const double> errors, double fitted) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            csv.row({study, format_full(params[i]), format_full(errors[i]),
                     i > 0 ? format_full(pairwise_order(params[i - 1], errors[i - 1], params[i],
                                                        errors[i]))
                           : std::string{},
                     format_full(fitted)});
        }
    };
    emit("space", hs, summary.space_errors, summary.space_fitted);
    emit("time_semi_implicit", cfg.conv_tau, summary.semi_errors, summary.semi_fitted);
    emit("time_theta", cfg.conv_tau, summary.theta_errors, summary.theta_fitted);
    emit("scheme_gap", cfg.conv_tau, summary.gap_values, summary.gap_fitted);
    csv.flush();
    return summary;
}

/// Assembly, factorization and per-step timings over a grid-size ladder for
/// the factor-once scheme and the fully implicit theta = 0 iteration.
inline void cmd_bench(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    detail::ensure_directory(out_dir);
    detail::write_resolved_config(cfg, out_dir);

    CsvFile csv((out_dir / "bench.csv").string());
    csv.row({"m", "scheme", "assemble_seconds", "factor_seconds", "factor_count",
             "mean_step_seconds", "step_stddev_seconds", "steps_per_second"});

    for (int m : cfg.bench_m) {
        RunConfig local = cfg;
        local.grid_m = m;
        if (local.gamma_i_mode == "both") {
            local.gamma_i_mode = "derived";
        }
        const EnvelopeSetup setup = prepare_envelope_run(local);

        StopWatch assemble_watch;
        const BlockOperator op = assemble_block_operator(setup.coeffs, setup.order, setup.grid);
        const double assemble_seconds = assemble_watch.seconds();

        const auto time_steps = [&](auto&& step_fn) {
            ComplexField state = setup.initial;
            double sum = 0.0;
            double sum_sq = 0.0;
            for (int s = 0; s < cfg.bench_steps; ++s) {
                StopWatch w;
                state = step_fn(state);
                const double dt = w.seconds();
                sum += dt;
                sum_sq += dt * dt;
            }
            const double mean = sum / cfg.bench_steps;
            const double var = std::max(0.0, sum_sq / cfg.bench_steps - mean * mean);
            return std::pair<double, double>{mean, std::sqrt(var)};
        };

        {
            StopWatch factor_watch;
            const SemiImplicitFactorization fact(op, cfg.time_step);
            const double factor_seconds = factor_watch.seconds();
            const auto [mean, stddev] = time_steps([&](const ComplexField& s) {
                return step_semi_implicit(s, fact, setup.coeffs, cfg.time_step);
            });
            csv.row({std::to_string(m), "semi_implicit", format_short(assemble_seconds),
                     format_short(factor_seconds), "1", format_short(mean),
                     format_short(stddev), format_short(mean > 0.0 ? 1.0 / mean : 0.0)});
        }
        {
            StopWatch factor_watch;
            const ThetaFactorization fact(op, cfg.time_step, 0.0);
            const double factor_seconds = factor_watch.seconds();
            const auto [mean, stddev] = time_steps([&](const ComplexField& s) {
                return step_theta(s, op, fact, setup.coeffs, cfg.fixed_point_tol,
                                  cfg.fixed_point_max_iters);
            });
            csv.row({std::to_string(m), "implicit_theta0", format_short(assemble_seconds),
                     format_short(factor_seconds), "1", format_short(mean),
                     format_short(stddev), format_short(mean > 0.0 ? 1.0 / mean : 0.0)});
        }
    }
    csv.flush();
}

}  // namespace fgl
