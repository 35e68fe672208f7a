#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fgl/cli.hpp"
#include "fgl/config.hpp"
#include "fgl/errors.hpp"
#include "fgl/version.hpp"

namespace {

std::filesystem::path resolve_out_dir(const std::string& dir) {
    std::filesystem::path p(dir);
    if (p.is_relative()) {
        if (const char* root = std::getenv("FGL_OUT_ROOT")) {
            return std::filesystem::path(root) / p;
        }
    }
    return p;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fractional Ginzburg-Landau envelope and neuron-chain toolkit"};
    app.set_version_flag("--version", std::string("fgl ") + fgl::version_string);

    std::string config_path;
    std::string out_override;
    std::vector<double> alpha_sweep;
    std::uint64_t seed_value = 0;
    int jobs = 1;
    app.add_option("--config", config_path, "Run configuration file (key = value lines)");
    app.add_option("--out", out_override, "Output directory (overrides config out_dir)");
    app.add_option("--alpha", alpha_sweep,
                   "Override the differentiation order; repeat to sweep (evolve only)");
    auto* seed_opt = app.add_option("--seed", seed_value, "Override the RNG seed");
    app.add_option("--jobs", jobs, "Worker threads for parameter sweeps")
        ->check(CLI::PositiveNumber);

    auto* dispersion = app.add_subcommand("dispersion", "Tabulate linear dispersion branches");
    auto* evolve = app.add_subcommand("evolve", "Evolve the solitary envelope profile");
    auto* hr_sim = app.add_subcommand("hr-sim", "Integrate the neuron chain");
    auto* convergence = app.add_subcommand("convergence", "Run the self-convergence studies");
    auto* bench = app.add_subcommand("bench", "Time assembly, factorization and stepping");
    for (auto* sub : {dispersion, evolve, hr_sim, convergence, bench}) {
        sub->fallthrough();
    }
    app.require_subcommand(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        fgl::RunConfig cfg = config_path.empty()
                                 ? fgl::default_config()
                                 : fgl::parse_config(fgl::load_text_file(config_path));
        if (seed_opt->count() > 0) {
            cfg.seed = seed_value;
        }
        if (!alpha_sweep.empty()) {
            for (double a : alpha_sweep) {
                fgl::require_envelope_alpha(a, "--alpha");
            }
            cfg.alpha = alpha_sweep.front();
        }
        const std::filesystem::path out_dir =
            resolve_out_dir(out_override.empty() ? cfg.out_dir : out_override);

        if (dispersion->parsed()) {
            fgl::cmd_dispersion(cfg, out_dir);
        } else if (evolve->parsed()) {
            fgl::cmd_evolve(cfg, out_dir, alpha_sweep, jobs);
        } else if (hr_sim->parsed()) {
            fgl::cmd_hr_sim(cfg, out_dir);
        } else if (convergence->parsed()) {
            fgl::cmd_convergence(cfg, out_dir);
        } else if (bench->parsed()) {
            fgl::cmd_bench(cfg, out_dir);
        }
        return 0;
    } catch (const fgl::config_error& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const fgl::io_error& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return 4;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return 4;
    } catch (const fgl::numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const std::domain_error& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
