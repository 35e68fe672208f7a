#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fgl/csv.hpp"
#include "fgl/errors.hpp"
#include "fgl/version.hpp"

namespace fgl {

/// Every tunable of the command-line tool, one key per field. Parsing is
/// strict: unknown keys, duplicates and malformed values are rejected.
struct RunConfig {
    // Envelope model.
    double alpha = 1.8;
    double carrier_k = 0.5;
    double theta0 = 0.0;
    std::optional<double> omega_override;
    std::string gamma_i_mode = "zero";  // zero | derived | both
    double omega0_sq = 0.032;
    double lambda1 = 0.01;
    double lambda3 = 0.023;
    double eta0 = 0.1;
    double eta1 = 0.001;
    double eta2 = 0.15;
    double fast_slow_ratio = 0.008;
    double c0 = 0.001;
    double c1 = 0.001;
    double b0 = 0.5;

    // Grid and time stepping.
    double domain_length = 100.0;
    int grid_m = 512;
    double time_step = 1e-4;
    double t_final = 0.2;
    std::string scheme = "semi_implicit";  // semi_implicit | theta
    double theta = 0.5;
    int snapshot_stride = 0;  // 0 resolves to ~200 snapshots per run
    double fixed_point_tol = 1e-10;
    int fixed_point_max_iters = 50;
    std::optional<double> pulse_center;  // unset resolves to domain_length / 2

    // Dispersion tabulation.
    std::vector<double> dispersion_alphas = {1.6, 1.7, 1.8};
    double dispersion_k_min = 0.0;
    double dispersion_k_max = 3.0;
    int dispersion_k_count = 301;

    // Neuron chain.
    int hr_n = 10;
    double hr_a = 1.0;
    double hr_b = 3.0;
    double hr_c = 1.0;
    double hr_d = 5.0;
    double hr_r = 0.008;
    double hr_s = 4.0;
    double hr_e = 1.0;
    double hr_u0 = -1.6;
    double hr_current = 3.0;
    double hr_coupling_k = 0.1;
    double hr_alpha = 1.8;
    bool hr_diffusive_coupling = false;
    double hr_dt = 0.005;
    double hr_t_final = 200.0;
    int hr_record_stride = 20;
    double hr_spike_threshold = 1.0;
    int hr_min_spike_gap_steps = 10;
    std::string hr_perturb_mode = "bump";  // none | bump | random
    double hr_perturb_amplitude = 0.1;
    int hr_perturb_neuron = 0;

    // Convergence studies.
    std::vector<int> conv_space_m = {64, 128, 256, 512};
    int conv_space_m_ref = 2048;
    std::vector<double> conv_tau = {5e-3, 2.5e-3, 1.25e-3};
    double conv_tau_ref = 7.8125e-5;
    int conv_m = 256;
    double conv_t_final = 0.05;
    double conv_domain_length = 20.0;
    double conv_gamma_r = -0.8;
    double conv_gamma_i = 0.4;
    double conv_p_r = 0.05;
    double conv_q_r = 1.0;
    double conv_q_i = 0.6;
    double conv_alpha = 1.5;
    double conv_fixed_point_tol = 1e-13;

    // Benchmark.
    std::vector<int> bench_m = {128, 256, 512};
    int bench_steps = 200;

    // Misc.
    std::uint64_t seed = 12345;
    std::string out_dir = "out";

    bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

inline double parse_double_value(std::string_view s) {
    double v = 0.0;
    const char* last = s.data() + s.size();
    const auto res = std::from_chars(s.data(), last, v);
    if (res.ec != std::errc{} || res.ptr != last || s.empty()) {
        throw std::invalid_argument("expected a number, got '" + std::string(s) + "'");
    }
    if (!std::isfinite(v)) {
        throw std::invalid_argument("value must be finite");
    }
    return v;
}

inline int parse_int_value(std::string_view s) {
    int v = 0;
    const char* last = s.data() + s.size();
    const auto res = std::from_chars(s.data(), last, v);
    if (res.ec != std::errc{} || res.ptr != last || s.empty()) {
        throw std::invalid_argument("expected an integer, got '" + std::string(s) + "'");
    }
    return v;
}

inline std::uint64_t parse_uint_value(std::string_view s) {
    std::uint64_t v = 0;
    const char* last = s.data() + s.size();
    const auto res = std::from_chars(s.data(), last, v);
    if (res.ec != std::errc{} || res.ptr != last || s.empty()) {
        throw std::invalid_argument("expected a non-negative integer, got '" + std::string(s) +
                                    "'");
    }
    return v;
}

inline bool parse_bool_value(std::string_view s) {
    if (s == "true") {
        return true;
    }
    if (s == "false") {
        return false;
    }
    throw std::invalid_argument("expected true or false, got '" + std::string(s) + "'");
}

template <class T, class Parse>
std::vector<T> parse_list_value(std::string_view s, Parse parse) {
    std::vector<T> out;
    while (true) {
        const auto comma = s.find(',');
        const std::string_view piece = trim(s.substr(0, comma));
        if (piece.empty()) {
            throw std::invalid_argument("empty list element");
        }
        out.push_back(parse(piece));
        if (comma == std::string_view::npos) {
            break;
        }
        s.remove_prefix(comma + 1);
    }
    return out;
}

struct ConfigKey {
    std::string name;
    std::function<void(RunConfig&, std::string_view)> set;
    std::function<std::optional<std::string>(const RunConfig&)> get;
};

inline std::vector<ConfigKey> make_schema() {
    std::vector<ConfigKey> keys;

    const auto add_double = [&keys](const char* name, double RunConfig::* m) {
        keys.push_back({name,
                        [m](RunConfig& c, std::string_view s) { c.*m = parse_double_value(s); },
                        [m](const RunConfig& c) -> std::optional<std::string> {
                            return format_short(c.*m);
                        }});
    };
    const auto add_opt_double = [&keys](const char* name, std::optional<double> RunConfig::* m) {
        keys.push_back({name,
                        [m](RunConfig& c, std::string_view s) { c.*m = parse_double_value(s); },
                        [m](const RunConfig& c) -> std::optional<std::string> {
                            if (!(c.*m)) {
                                return std::nullopt;
                            }
                            return format_short(*(c.*m));
                        }});
    };
    const auto add_int = [&keys](const char* name, int RunConfig::* m) {
        keys.push_back({name,
                        [m](RunConfig& c, std::string_view s) { c.*m = parse_int_value(s); },
                        [m](const RunConfig& c) -> std::optional<std::string> {
                            return std::to_string(c.*m);
                        }});
    };
    const auto add_uint = [&keys](const char* name, std::uint64_t RunConfig::* m) {
        keys.push_back({name,
                        [m](RunConfig& c, std::string_view s) { c.*m = parse_uint_value(s); },
                        [m](const RunConfig& c) -> std::optional<std::string> {
                            return std::to_string(c.*m);
                        }});
    };
    const auto add_bool = [&keys](const char* name, bool RunConfig::* m) {
        keys.push_back({name,
                        [m](RunConfig& c, std::string_view s) { c.*m = parse_bool_value(s); },
                        [m](const RunConfig& c) -> std::optional<std::string> {
                            return c.*m ? "true" : "false";
                        }});
    };
    const auto add_enum = [&keys](const char* name, std::string RunConfig::* m,
                                  std::vector<std::string> allowed) {
        keys.push_back({name,
                        [m, allowed](RunConfig& c, std::string_view s) {
                            for (const auto& a : allowed) {
                                if (s == a) {
                                    c.*m = a;
                                    return;
                                }
                            }
                            std::string msg = "expected one of {";
                            for (std::size_t i = 0; i < allowed.size(); ++i) {
                                msg += (i > 0 ? ", " : "") + allowed[i];
                            }
                            throw std::invalid_argument(msg + "}, got '" + std::string(s) + "'");
                        },
                        [m](const RunConfig& c) -> std::optional<std::string> { return c.*m; }});
    };
    const auto add_string = [&keys](const char* name, std::string RunConfig::* m) {
        keys.push_back({name,
                        [m](RunConfig& c, std::string_view s) {
                            if (s.empty()) {
                                throw std::invalid_argument("must not be empty");
                            }
                            c.*m = std::string(s);
                        },
                        [m](const RunConfig& c) -> std::optional<std::string> { return c.*m; }});
    };
    const auto add_double_list = [&keys](const char* name, std::vector<double> RunConfig::* m) {
        keys.push_back({name,
                        [m](RunConfig& c, std::string_view s) {
                            c.*m = parse_list_value<double>(s, parse_double_value);
                        },
                        [m](const RunConfig& c) -> std::optional<std::string> {
                            std::string out;
                            for (std::size_t i = 0; i < (c.*m).size(); ++i) {
                                out += (i > 0 ? "," : "") + format_short((c.*m)[i]);
                            }
                            return out;
                        }});
    };
    const auto add_int_list = [&keys](const char* name, std::vector<int> RunConfig::* m) {
        keys.push_back({name,
                        [m](RunConfig& c, std::string_view s) {
                            c.*m = parse_list_value<int>(s, parse_int_value);
                        },
                        [m](const RunConfig& c) -> std::optional<std::string> {
                            std::string out;
                            for (std::size_t i = 0; i < (c.*m).size(); ++i) {
                                out += (i > 0 ? "," : "") + std::to_string((c.*m)[i]);
                            }
                            return out;
                        }});
    };

    add_double("alpha", &RunConfig::alpha);
    add_double("carrier_k", &RunConfig::carrier_k);
    add_double("theta0", &RunConfig::theta0);
    add_opt_double("omega_override", &RunConfig::omega_override);
    add_enum("gamma_i_mode", &RunConfig::gamma_i_mode, {"zero", "derived", "both"});
    add_double("omega0_sq", &RunConfig::omega0_sq);
    add_double("lambda1", &RunConfig::lambda1);
    add_double("lambda3", &RunConfig::lambda3);
    add_double("eta0", &RunConfig::eta0);
    add_double("eta1", &RunConfig::eta1);
    add_double("eta2", &RunConfig::eta2);
    add_double("fast_slow_ratio", &RunConfig::fast_slow_ratio);
    add_double("c0", &RunConfig::c0);
    add_double("c1", &RunConfig::c1);
    add_double("b0", &RunConfig::b0);

    add_double("domain_length", &RunConfig::domain_length);
    add_int("grid_m", &RunConfig::grid_m);
    add_double("time_step", &RunConfig::time_step);
    add_double("t_final", &RunConfig::t_final);
    add_enum("scheme", &RunConfig::scheme, {"semi_implicit", "theta"});
    add_double("theta", &RunConfig::theta);
    add_int("snapshot_stride", &RunConfig::snapshot_stride);
    add_double("fixed_point_tol", &RunConfig::fixed_point_tol);
    add_int("fixed_point_max_iters", &RunConfig::fixed_point_max_iters);
    add_opt_double("pulse_center", &RunConfig::pulse_center);

    add_double_list("dispersion_alphas", &RunConfig::dispersion_alphas);
    add_double("dispersion_k_min", &RunConfig::dispersion_k_min);
    add_double("dispersion_k_max", &RunConfig::dispersion_k_max);
    add_int("dispersion_k_count", &RunConfig::dispersion_k_count);

    add_int("hr_n", &RunConfig::hr_n);
    add_double("hr_a", &RunConfig::hr_a);
    add_double("hr_b", &RunConfig::hr_b);
    add_double("hr_c", &RunConfig::hr_c);
    add_double("hr_d", &RunConfig::hr_d);
    add_double("hr_r", &RunConfig::hr_r);
    add_double("hr_s", &RunConfig::hr_s);
    add_double("hr_e", &RunConfig::hr_e);
    add_double("hr_u0", &RunConfig::hr_u0);
    add_double("hr_current", &RunConfig::hr_current);
    add_double("hr_coupling_k", &RunConfig::hr_coupling_k);
    add_double("hr_alpha", &RunConfig::hr_alpha);
    add_bool("hr_diffusive_coupling", &RunConfig::hr_diffusive_coupling);
    add_double("hr_dt", &RunConfig::hr_dt);
    add_double("hr_t_final", &RunConfig::hr_t_final);
    add_int("hr_record_stride", &RunConfig::hr_record_stride);
    add_double("hr_spike_threshold", &RunConfig::hr_spike_threshold);
    add_int("hr_min_spike_gap_steps", &RunConfig::hr_min_spike_gap_steps);
    add_enum("hr_perturb_mode", &RunConfig::hr_perturb_mode, {"none", "bump", "random"});
    add_double("hr_perturb_amplitude", &RunConfig::hr_perturb_amplitude);
    add_int("hr_perturb_neuron", &RunConfig::hr_perturb_neuron);

    add_int_list("conv_space_m", &RunConfig::conv_space_m);
    add_int("conv_space_m_ref", &RunConfig::conv_space_m_ref);
    add_double_list("conv_tau", &RunConfig::conv_tau);
    add_double("conv_tau_ref", &RunConfig::conv_tau_ref);
    add_int("conv_m", &RunConfig::conv_m);
    add_double("conv_t_final", &RunConfig::conv_t_final);
    add_double("conv_domain_length", &RunConfig::conv_domain_length);
    add_double("conv_gamma_r", &RunConfig::conv_gamma_r);
    add_double("conv_gamma_i", &RunConfig::conv_gamma_i);
    add_double("conv_p_r", &RunConfig::conv_p_r);
    add_double("conv_q_r", &RunConfig::conv_q_r);
    add_double("conv_q_i", &RunConfig::conv_q_i);
    add_double("conv_alpha", &RunConfig::conv_alpha);
    add_double("conv_fixed_point_tol", &RunConfig::conv_fixed_point_tol);

    add_int_list("bench_m", &RunConfig::bench_m);
    add_int("bench_steps", &RunConfig::bench_steps);

    add_uint("seed", &RunConfig::seed);
    add_string("out_dir", &RunConfig::out_dir);

    return keys;
}

inline const std::vector<ConfigKey>& schema() {
    static const std::vector<ConfigKey> keys = make_schema();
    return keys;
}

inline const ConfigKey* find_key(std::string_view name) {
    for (const auto& k : schema()) {
        if (k.name == name) {
            return &k;
        }
    }
    return nullptr;
}

/// Number of steps T / tau, or -1 when T is not an integer multiple of tau.
inline long long integer_steps(double t_final, double tau) {
    if (!(tau > 0.0) || !(t_final > 0.0)) {
        return -1;
    }
    const auto n = static_cast<long long>(std::llround(t_final / tau));
    if (n < 1 ||
        std::abs(static_cast<double>(n) * tau - t_final) > 1e-9 * std::max(1.0, t_final)) {
        return -1;
    }
    return n;
}

}  // namespace detail

/// Rejects an envelope differentiation order outside (0, 2) \ {1}.
inline void require_envelope_alpha(double alpha, const std::string& key) {
    if (!std::isfinite(alpha) || alpha <= 0.0 || alpha >= 2.0 || alpha == 1.0) {
        throw config_error(key + " must lie in (0, 2) and differ from 1, got " +
                           (std::isfinite(alpha) ? format_short(alpha) : std::string("nan")));
    }
}

/// Cross-field validation; assumes auto values are already resolved.
inline void validate_config(const RunConfig& c) {
    const auto require = [](bool ok, const std::string& msg) {
        if (!ok) {
            throw config_error(msg);
        }
    };

    require_envelope_alpha(c.alpha, "alpha");
    require(c.omega0_sq > 0.0, "omega0_sq must be positive");
    require(c.fast_slow_ratio > 0.0, "fast_slow_ratio must be positive");
    if (c.omega_override) {
        require(*c.omega_override > 0.0, "omega_override must be positive");
    }

    require(c.domain_length > 0.0, "domain_length must be positive");
    require(c.grid_m >= 2, "grid_m must be at least 2");
    require(c.time_step > 0.0, "time_step must be positive");
    require(c.t_final > 0.0, "t_final must be positive");
    require(detail::integer_steps(c.t_final, c.time_step) > 0,
            "t_final must be an integer multiple of time_step");
    require(c.theta >= 0.0 && c.theta <= 1.0, "theta must lie in [0, 1]");
    require(c.snapshot_stride >= 1, "snapshot_stride must be >= 1 (or 0 for automatic)");
    require(c.fixed_point_tol > 0.0, "fixed_point_tol must be positive");
    require(c.fixed_point_max_iters >= 1, "fixed_point_max_iters must be >= 1");
    require(c.pulse_center.has_value() && *c.pulse_center >= 0.0 &&
                *c.pulse_center <= c.domain_length,
            "pulse_center must lie inside [0, domain_length]");

    require(!c.dispersion_alphas.empty(), "dispersion_alphas must not be empty");
    for (double a : c.dispersion_alphas) {
        require_envelope_alpha(a, "dispersion_alphas");
    }
    require(c.dispersion_k_min >= 0.0, "dispersion_k_min must be >= 0");
    require(c.dispersion_k_max > c.dispersion_k_min,
            "dispersion_k_max must exceed dispersion_k_min");
    require(c.dispersion_k_count >= 2, "dispersion_k_count must be >= 2");

    require(c.hr_n >= 1, "hr_n must be >= 1");
    require(c.hr_r > 0.0, "hr_r must be positive");
    require(c.hr_e != 0.0, "hr_e must be nonzero (the rest state divides by it)");
    require(c.hr_alpha > 0.0, "hr_alpha must be positive");
    require(c.hr_dt > 0.0, "hr_dt must be positive");
    require(c.hr_t_final > 0.0, "hr_t_final must be positive");
    require(detail::integer_steps(c.hr_t_final, c.hr_dt) > 0,
            "hr_t_final must be an integer multiple of hr_dt");
    require(c.hr_record_stride >= 1, "hr_record_stride must be >= 1");
    require(c.hr_min_spike_gap_steps >= 1, "hr_min_spike_gap_steps must be >= 1");
    require(c.hr_perturb_neuron >= 0 && c.hr_perturb_neuron < c.hr_n,
            "hr_perturb_neuron must index a neuron in [0, hr_n)");

    require(c.conv_space_m.size() >= 3, "conv_space_m needs at least 3 grid sizes");
    for (std::size_t i = 0; i < c.conv_space_m.size(); ++i) {
        require(c.conv_space_m[i] >= 4, "conv_space_m entries must be >= 4");
        if (i > 0) {
            require(c.conv_space_m[i] > c.conv_space_m[i - 1],
                    "conv_space_m must increase strictly");
        }
        require(c.conv_space_m_ref % c.conv_space_m[i] == 0,
                "conv_space_m entries must divide conv_space_m_ref");
    }
    require(c.conv_space_m_ref > c.conv_space_m.back(),
            "conv_space_m_ref must exceed the finest study grid");

    require(c.conv_tau.size() >= 3, "conv_tau needs at least 3 step sizes");
    for (std::size_t i = 0; i < c.conv_tau.size(); ++i) {
        require(c.conv_tau[i] > 0.0, "conv_tau entries must be positive");
        if (i > 0) {
            require(c.conv_tau[i] < c.conv_tau[i - 1], "conv_tau must decrease strictly");
        }
        require(detail::integer_steps(c.conv_t_final, c.conv_tau[i]) > 0,
                "conv_t_final must be an integer multiple of every conv_tau entry");
    }
    require(c.conv_tau_ref > 0.0 && c.conv_tau_ref < 0.5 * c.conv_tau.back(),
            "conv_tau_ref must be well below the finest conv_tau entry");
    require(detail::integer_steps(c.conv_t_final, c.conv_tau_ref) > 0,
            "conv_t_final must be an integer multiple of conv_tau_ref");
    require(c.conv_m >= 2, "conv_m must be at least 2");
    require(c.conv_domain_length > 0.0, "conv_domain_length must be positive");
    require_envelope_alpha(c.conv_alpha, "conv_alpha");
    require(c.conv_fixed_point_tol > 0.0, "conv_fixed_point_tol must be positive");

    require(!c.bench_m.empty(), "bench_m must not be empty");
    for (int m : c.bench_m) {
        require(m >= 2, "bench_m entries must be at least 2");
    }
    require(c.bench_steps >= 1, "bench_steps must be >= 1");

    require(!c.out_dir.empty(), "out_dir must not be empty");
}

/// Fills auto values: pulse_center defaults to the domain midpoint and
/// snapshot_stride 0 becomes roughly 200 snapshots over the run.
inline void finalize_config(RunConfig& c) {
    if (!c.pulse_center) {
        c.pulse_center = 0.5 * c.domain_length;
    }
    if (c.snapshot_stride == 0) {
        const long long steps = detail::integer_steps(c.t_final, c.time_step);
        if (steps > 0) {
            c.snapshot_stride = static_cast<int>(std::max<long long>(1, (steps + 199) / 200));
        }
    }
}

/// Parses `key = value` lines. '#' starts a comment; blank lines are
/// ignored. The result has all auto values resolved and is fully validated.
inline RunConfig parse_config(std::string_view text) {
    RunConfig cfg;
    std::set<std::string, std::less<>> seen;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos
                                                                               : eol - pos);
        ++line_no;
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;

        const std::size_t hash = line.find('#');
        if (hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = detail::trim(line);
        if (line.empty()) {
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw config_error("line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string_view key = detail::trim(line.substr(0, eq));
        const std::string_view value = detail::trim(line.substr(eq + 1));
        if (key.empty()) {
            throw config_error("line " + std::to_string(line_no) + ": missing key");
        }
        const detail::ConfigKey* handler = detail::find_key(key);
        if (handler == nullptr) {
            throw config_error("line " + std::to_string(line_no) + ": unknown key '" +
                               std::string(key) + "'");
        }
        if (!seen.insert(std::string(key)).second) {
            throw config_error("line " + std::to_string(line_no) + ": duplicate key '" +
                               std::string(key) + "'");
        }
        try {
            handler->set(cfg, value);
        } catch (const config_error&) {
            throw;
        } catch (const std::exception& e) {
            throw config_error("line " + std::to_string(line_no) + ": key '" + std::string(key) +
                               "': " + e.what());
        }
    }
    finalize_config(cfg);
    validate_config(cfg);
    return cfg;
}

inline RunConfig default_config() { return parse_config(""); }

/// Exact textual image of a resolved configuration; parsing it reproduces
/// the struct bit for bit.
inline std::string echo_config(const RunConfig& cfg) {
    std::string out = "# fgl ";
    out += version_string;
    out += '\n';
    for (const auto& key : detail::schema()) {
        const std::optional<std::string> value = key.get(cfg);
        if (value) {
            out += key.name;
            out += " = ";
            out += *value;
            out += '\n';
        }
    }
    return out;
}

inline std::string load_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("cannot open " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) {
        throw io_error("read failed on " + path);
    }
    return ss.str();
}

}  // namespace fgl
