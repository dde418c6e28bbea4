#include "bethe/config.hpp"

#include <fstream>

#include "bethe/errors.hpp"
#include "bethe/io.hpp"

namespace bethe {

namespace {

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void require(bool cond, const std::string& message) {
    if (!cond) throw ConfigError(message);
}

}  // namespace

std::string to_string(Mode m) {
    switch (m) {
        case Mode::green_validate: return "green-validate";
        case Mode::pool_run: return "pool-run";
        case Mode::phase_map: return "phase-map";
        case Mode::dynamics_run: return "dynamics-run";
        case Mode::hatp_run: return "hatp-run";
        case Mode::bounds_check: return "bounds-check";
        case Mode::theorem1_scan: return "theorem1-scan";
    }
    return "?";
}

std::optional<Mode> mode_from_string(const std::string& s) {
    if (s == "green-validate") return Mode::green_validate;
    if (s == "pool-run") return Mode::pool_run;
    if (s == "phase-map") return Mode::phase_map;
    if (s == "dynamics-run") return Mode::dynamics_run;
    if (s == "hatp-run") return Mode::hatp_run;
    if (s == "bounds-check") return Mode::bounds_check;
    if (s == "theorem1-scan") return Mode::theorem1_scan;
    return std::nullopt;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    try {
        if (j.contains("mode")) {
            const auto m = mode_from_string(j.at("mode").get<std::string>());
            require(m.has_value(), "mode: unknown mode '" + j.at("mode").get<std::string>() + "'");
            c.mode = *m;
        }
        if (j.contains("geometry")) {
            const auto& g = j.at("geometry");
            read_if(g, "K", c.K);
            read_if(g, "D", c.D);
            read_if(g, "K_grid", c.K_grid);
        }
        if (j.contains("distribution")) c.dist = dist_from_json(j.at("distribution"));
        if (j.contains("energy")) {
            const auto& e = j.at("energy");
            read_if(e, "E", c.E);
            read_if(e, "eta", c.eta);
            read_if(e, "E_grid", c.E_grid);
            read_if(e, "eta_grid", c.eta_grid);
        }
        if (j.contains("window")) {
            c.window_E1 = j.at("window").at("E1").get<double>();
            c.window_E2 = j.at("window").at("E2").get<double>();
            c.has_window = true;
        }
        read_if(j, "t_grid", c.t_grid);
        read_if(j, "v_grid", c.v_grid);
        read_if(j, "beta_grid", c.beta_grid);
        read_if(j, "b_grid", c.b_grid);
        read_if(j, "x_grid", c.x_grid);
        read_if(j, "s_grid", c.s_grid);
        read_if(j, "n_range", c.n_range);
        if (j.contains("pool")) {
            const auto& p = j.at("pool");
            read_if(p, "size", c.pool_size);
            read_if(p, "burnin", c.burnin);
            read_if(p, "sweeps", c.sweeps);
        }
        if (j.contains("samples")) {
            const auto& s = j.at("samples");
            read_if(s, "n_root", c.n_root);
            read_if(s, "n_paths", c.n_paths);
            read_if(s, "n_fields", c.n_fields);
        }
        if (j.contains("quadrature")) {
            const auto& q = j.at("quadrature");
            read_if(q, "nodes", c.quad_nodes);
            read_if(q, "max_nodes", c.quad_max_nodes);
            read_if(q, "rel_tol", c.quad_rel_tol);
        }
        if (j.contains("tolerances")) {
            const auto& t = j.at("tolerances");
            read_if(t, "propagate", c.tol_propagate);
            read_if(t, "oracle", c.tol_oracle);
        }
        read_if(j, "checks", c.checks);
        read_if(j, "seed", c.seed);
        read_if(j, "threads", c.threads);
        read_if(j, "out", c.out_dir);
        read_if(j, "force", c.force);
        read_if(j, "negative_control", c.negative_control);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: malformed field: ") + e.what());
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config: cannot open " + path.string());
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: parse error: ") + e.what());
    }
    return config_from_json(j);
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["mode"] = to_string(mode);
    j["geometry"] = {{"K", K}, {"D", D}};
    if (!K_grid.empty()) j["geometry"]["K_grid"] = K_grid;
    j["distribution"] = dist_to_json(dist);
    j["energy"] = {{"E", E}, {"eta", eta}};
    if (!E_grid.empty()) j["energy"]["E_grid"] = E_grid;
    if (!eta_grid.empty()) j["energy"]["eta_grid"] = eta_grid;
    if (has_window) j["window"] = {{"E1", window_E1}, {"E2", window_E2}};
    if (!t_grid.empty()) j["t_grid"] = t_grid;
    if (!v_grid.empty()) j["v_grid"] = v_grid;
    j["beta_grid"] = beta_grid;
    if (!b_grid.empty()) j["b_grid"] = b_grid;
    if (!x_grid.empty()) j["x_grid"] = x_grid;
    j["s_grid"] = s_grid;
    j["n_range"] = n_range;
    j["pool"] = {{"size", pool_size}, {"burnin", burnin}, {"sweeps", sweeps}};
    j["samples"] = {{"n_root", n_root}, {"n_paths", n_paths}, {"n_fields", n_fields}};
    j["quadrature"] = {{"nodes", quad_nodes}, {"max_nodes", quad_max_nodes}, {"rel_tol", quad_rel_tol}};
    j["tolerances"] = {{"propagate", tol_propagate}, {"oracle", tol_oracle}};
    if (!checks.empty()) j["checks"] = checks;
    j["seed"] = seed;
    j["threads"] = threads;
    j["out"] = out_dir;
    if (force) j["force"] = true;
    if (negative_control) j["negative_control"] = true;
    return j;
}

std::string ExperimentConfig::hash() const {
    // digest over the canonical dump, minus fields that do not affect payloads
    nlohmann::json j = to_json();
    j.erase("out");
    j.erase("threads");
    if (j.contains("force")) j.erase("force");
    return digest(j.dump());
}

void validate(const ExperimentConfig& c) {
    require(c.K >= 2, "geometry.K: must be >= 2");
    require(c.D >= 0, "geometry.D: must be >= 0");
    for (std::int64_t k : c.K_grid) require(k >= 2, "geometry.K_grid: entries must be >= 2");
    require(c.eta > 0.0 && c.eta <= 1.0, "energy.eta: must lie in (0, 1]");
    for (double e : c.eta_grid) require(e > 0.0 && e <= 1.0, "energy.eta_grid: entries must lie in (0, 1]");
    require(c.pool_size >= 2, "pool.size: must be >= 2");
    require(c.burnin >= 1, "pool.burnin: must be >= 1");
    require(c.sweeps >= 2, "pool.sweeps: must be >= 2");
    require(c.n_root >= 2, "samples.n_root: must be >= 2");
    require(c.n_paths >= 2, "samples.n_paths: must be >= 2");
    require(c.n_fields >= 1, "samples.n_fields: must be >= 1");
    require(c.quad_nodes >= 32, "quadrature.nodes: must be >= 32");
    require(c.quad_max_nodes >= c.quad_nodes, "quadrature.max_nodes: must be >= nodes");
    require(c.quad_rel_tol > 0.0, "quadrature.rel_tol: must be > 0");
    require(c.tol_propagate > 1e-14 && c.tol_propagate < 1e-6,
            "tolerances.propagate: must lie in (1e-14, 1e-6)");
    require(c.threads >= 0, "threads: must be >= 0");
    for (double s : c.s_grid) require(s >= 0.0 && s <= 2.0, "s_grid: entries must lie in [0, 2]");
    for (std::int64_t n : c.n_range) require(n >= 1, "n_range: entries must be >= 1");

    if (c.has_window) {
        require(c.window_E1 < c.window_E2, "window: need E1 < E2");
        const auto [lo, hi] = spectrum_interval(c.K, c.dist);
        require(c.window_E1 >= lo && c.window_E2 <= hi,
                "window: must lie inside the almost-sure spectrum [" + fmt_g(lo) + ", " +
                    fmt_g(hi) + "]");
    }

    switch (c.mode) {
        case Mode::green_validate:
            require(!c.eta_grid.empty(), "green-validate: energy.eta_grid required");
            require(c.D <= 8, "green-validate: D too large for the dense oracle");
            break;
        case Mode::pool_run:
            break;
        case Mode::phase_map:
            require(!c.E_grid.empty(), "phase-map: energy.E_grid required");
            require(c.n_range.size() >= 4, "phase-map: n_range needs >= 4 lengths");
            break;
        case Mode::dynamics_run:
            require(!c.t_grid.empty(), "dynamics-run: t_grid required");
            for (double t : c.t_grid) require(t >= 0.0, "t_grid: entries must be >= 0");
            break;
        case Mode::hatp_run:
            require(c.has_window, "hatp-run: window required");
            require(!c.eta_grid.empty(), "hatp-run: energy.eta_grid required");
            break;
        case Mode::bounds_check:
            require(!c.checks.empty(), "bounds-check: checks list required");
            break;
        case Mode::theorem1_scan:
            require(c.has_window, "theorem1-scan: window required");
            require(!c.eta_grid.empty(), "theorem1-scan: energy.eta_grid required");
            require(!c.b_grid.empty(), "theorem1-scan: b_grid required");
            break;
    }
}

}  // namespace bethe
