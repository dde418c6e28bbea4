#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bethe/disorder.hpp"

namespace bethe {

enum class Mode {
    green_validate,
    pool_run,
    phase_map,
    dynamics_run,
    hatp_run,
    bounds_check,
    theorem1_scan,
};

std::string to_string(Mode m);
std::optional<Mode> mode_from_string(const std::string& s);

// One experiment = one config.  Parsed from a JSON file, validated per mode,
// and echoed verbatim into every manifest so runs are self-describing.
struct ExperimentConfig {
    Mode mode = Mode::pool_run;

    // geometry
    std::int64_t K = 2;
    std::int64_t D = 10;
    std::vector<std::int64_t> K_grid;  // green-validate sweeps several K

    PotentialDistribution dist = PotentialDistribution::uniform(1.0);

    // spectral parameters
    double E = 0.0;
    double eta = 1e-3;
    std::vector<double> E_grid;
    std::vector<double> eta_grid;
    double window_E1 = -1.0, window_E2 = 1.0;
    bool has_window = false;

    // grids
    std::vector<double> t_grid;
    std::vector<double> v_grid;
    std::vector<double> beta_grid = {0.0, 1.0, 2.0};
    std::vector<double> b_grid;
    std::vector<double> x_grid;
    std::vector<double> s_grid = {0.5, 1.0, 2.0};
    std::vector<std::int64_t> n_range = {5, 10, 15, 20, 25};

    // pool
    std::int64_t pool_size = 1000000;
    std::int64_t burnin = 100;
    std::int64_t sweeps = 20;  // post-burn-in stationarity window (x2)

    // sample counts
    std::int64_t n_root = 1000000;
    std::int64_t n_paths = 100000;
    std::int64_t n_fields = 20;

    // quadrature
    int quad_nodes = 64;
    int quad_max_nodes = 1024;
    double quad_rel_tol = 1e-4;

    // tolerances
    double tol_propagate = 1e-10;
    double tol_oracle = 1e-10;

    // bounds-check selection
    std::vector<std::string> checks;

    std::uint64_t seed = 1;
    int threads = 0;  // 0 = hardware
    std::string out_dir = "out";
    bool force = false;
    bool negative_control = false;

    nlohmann::json to_json() const;
    std::string hash() const;  // digest of the canonical serialization
};

ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

// per-mode validation; throws ConfigError with a field-level message
void validate(const ExperimentConfig& config);

}  // namespace bethe
