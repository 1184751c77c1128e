#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bsde/acceptance.hpp"
#include "bsde/config.hpp"
#include "bsde/errors.hpp"
#include "bsde/run.hpp"

namespace {

struct NullBuffer : std::streambuf {
    int overflow(int c) override { return c; }
};

}  // namespace

// Exit codes: 0 done, 1 unexpected failure, 2 configuration rejected,
// 3 solver failure, 4 perturbation target rejected by the smallness margin,
// 5 acceptance suite ran with failing criteria.
int main(int argc, char** argv) {
    CLI::App app{"certified regression Monte Carlo for structured backward SDE systems"};
    std::string config_path;
    std::uint64_t seed = 0;
    int n_paths = 0;
    int steps = 0;
    std::string out_dir;
    double tolerance_scale = 0.0;
    bool quiet = false;

    app.add_option("-c,--config", config_path, "JSON run configuration")->required();
    auto* seed_opt = app.add_option("--seed", seed, "override the configured seed");
    auto* paths_opt = app.add_option("--paths", n_paths, "override the configured path count");
    auto* steps_opt = app.add_option("--steps", steps, "override the configured step count");
    auto* out_opt = app.add_option("--out", out_dir, "override the output directory");
    auto* scale_opt = app.add_option("--tolerance-scale", tolerance_scale,
                                     "scale every acceptance tolerance (acceptance route)");
    app.add_flag("--quiet", quiet, "suppress the certificate echo on stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        bsde::RunConfig config = bsde::load_config(config_path);
        if (seed_opt->count() > 0) config.seed = seed;
        if (paths_opt->count() > 0) config.n_paths = n_paths;
        if (steps_opt->count() > 0) config.steps = steps;
        if (out_opt->count() > 0) config.out_dir = out_dir;
        if (scale_opt->count() > 0) config.tolerance_scale = tolerance_scale;
        if (quiet) config.quiet = true;
        bsde::validate_config(config);

        if (config.route == "acceptance") {
            bsde::AcceptanceOptions options;
            options.seed = config.seed;
            options.tolerance_scale = config.tolerance_scale;
            options.out_dir = config.out_dir;
            NullBuffer sink;
            std::ostream null_stream(&sink);
            const bsde::AcceptanceReport report =
                bsde::run_acceptance_suite(options, config.quiet ? null_stream : std::cout);
            return report.all_pass ? 0 : 5;
        }
        return bsde::execute_run(config, std::cout);
    } catch (const bsde::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const bsde::SolverError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}
