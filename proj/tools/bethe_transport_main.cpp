// bethe-transport: config-driven experiment runner.
//
//   bethe-transport <mode> --config <file> [--seed N] [--threads N]
//                   [--out DIR] [--force] [--negative-control]
//
// Flags override config-file values.  BETHE_TRANSPORT_OUT sets the default
// output root.  Exit codes: 0 ok, 1 check failed, 2 bad config, 3 numeric
// abort.

#include <clocale>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "bethe/errors.hpp"
#include "bethe/runner.hpp"

int main(int argc, char** argv) {
    std::setlocale(LC_ALL, "C");

    CLI::App app{"quantum transport laboratory on rooted regular trees"};
    app.set_version_flag("--version", bethe::kVersionString);

    std::string mode_str, config_path, out_dir;
    std::uint64_t seed = 0;
    int threads = -1;
    bool force = false, negative_control = false;

    app.add_option("mode", mode_str,
                   "green-validate | pool-run | phase-map | dynamics-run | hatp-run | "
                   "bounds-check | theorem1-scan")
        ->required();
    app.add_option("--config", config_path, "experiment config (JSON)")->required();
    auto* seed_opt = app.add_option("--seed", seed, "override config seed");
    auto* threads_opt = app.add_option("--threads", threads, "worker threads (0 = hardware)");
    auto* out_opt = app.add_option("--out", out_dir, "output root directory");
    app.add_flag("--force", force, "overwrite an existing non-empty output directory");
    app.add_flag("--negative-control", negative_control,
                 "adversarially perturb check inputs (harness self-test; checks must fail)");

    CLI11_PARSE(app, argc, argv);

    try {
        const auto mode = bethe::mode_from_string(mode_str);
        if (!mode) throw bethe::ConfigError("unknown mode '" + mode_str + "'");
        bethe::ExperimentConfig config = bethe::load_config(config_path);
        config.mode = *mode;
        if (seed_opt->count() > 0) config.seed = seed;
        if (threads_opt->count() > 0) config.threads = threads;
        if (out_opt->count() > 0) {
            config.out_dir = out_dir;
        } else if (const char* env = std::getenv("BETHE_TRANSPORT_OUT");
                   env != nullptr && config.out_dir == "out") {
            config.out_dir = env;
        }
        if (force) config.force = true;
        if (negative_control) config.negative_control = true;

        const bethe::RunResult result = bethe::run_experiment(config, std::cout);
        for (const std::string& f : result.outputs) std::cout << "wrote " << f << "\n";
        return result.exit_code;
    } catch (const bethe::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const bethe::NumericError& e) {
        std::cerr << "numeric abort: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
