#include "bethe/runner.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>

#include "bethe/bounds.hpp"
#include "bethe/dynamics.hpp"
#include "bethe/errors.hpp"
#include "bethe/io.hpp"
#include "bethe/parallel.hpp"
#include "bethe/population.hpp"
#include "bethe/rng.hpp"

namespace bethe {

namespace {

namespace fs = std::filesystem;

struct ModeContext {
    const ExperimentConfig& config;
    fs::path dir;
    std::string hash;
    int threads;
    std::vector<std::string> outputs;
    std::ostream& log;

    std::ofstream open_csv(const std::string& name, const std::string& header) {
        const fs::path p = dir / name;
        std::ofstream os(p, std::ios::trunc);
        if (!os) throw NumericError("cannot open output file " + p.string());
        os << "# config_hash=" << hash << "\n# seed=" << config.seed << "\n";
        os << header << "\n";
        outputs.push_back(name);
        return os;
    }

    void write_json(const std::string& name, const nlohmann::json& j) {
        const fs::path p = dir / name;
        std::ofstream os(p, std::ios::trunc);
        if (!os) throw NumericError("cannot open output file " + p.string());
        os << j.dump(2) << '\n';
        outputs.push_back(name);
    }

    void write_text(const std::string& name, const std::string& text) {
        const fs::path p = dir / name;
        std::ofstream os(p, std::ios::trunc);
        if (!os) throw NumericError("cannot open output file " + p.string());
        os << text;
        outputs.push_back(name);
    }
};

fs::path prepare_dir(const ExperimentConfig& config) {
    const fs::path dir = fs::path(config.out_dir) / to_string(config.mode);
    if (fs::exists(dir) && !fs::is_empty(dir) && !config.force)
        throw ConfigError("output directory " + dir.string() +
                          " is not empty; rerun with --force to overwrite");
    fs::create_directories(dir);
    return dir;
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_manifest(ModeContext& ctx, double wall_seconds, int exit_code) {
    nlohmann::json m;
    m["version"] = kVersionString;
    m["mode"] = to_string(ctx.config.mode);
    m["config"] = ctx.config.to_json();
    m["config_hash"] = ctx.hash;
    m["seed"] = ctx.config.seed;
    m["threads_resolved"] = ctx.threads;
    m["flags"] = {{"force", ctx.config.force},
                  {"negative_control", ctx.config.negative_control}};
    m["outputs"] = ctx.outputs;
    m["wall_time_s"] = wall_seconds;
    m["timestamp_utc"] = utc_now();
    m["exit_code"] = exit_code;
    std::ofstream os(ctx.dir / "manifest.json", std::ios::trunc);
    os << m.dump(2) << '\n';
}

std::uint64_t field_seed(const ExperimentConfig& config, std::uint64_t index) {
    return rng::u64(config.seed, rng::Stream::generic, 0x7e01, index);
}

std::vector<double> default_x_grid() { return {1e-3, 1e-2, 1e-1, 1.0, 10.0}; }

// ---- green-validate ----

int run_green_validate(ModeContext& ctx) {
    const ExperimentConfig& c = ctx.config;
    std::vector<std::int64_t> Ks = c.K_grid.empty() ? std::vector<std::int64_t>{c.K} : c.K_grid;
    struct Case {
        std::int64_t K;
        std::int64_t seed_idx;
        double eta;
    };
    std::vector<Case> cases;
    for (std::int64_t K : Ks)
        for (std::int64_t s = 0; s < c.n_fields; ++s)
            for (double eta : c.eta_grid) cases.push_back({K, s, eta});

    struct Row {
        double max_rel_err, l2_rel_err, min_im;
    };
    std::vector<Row> rows(cases.size());
    parallel_for(static_cast<std::int64_t>(cases.size()), ctx.threads, [&](std::int64_t i) {
        const Case& cs = cases[static_cast<std::size_t>(i)];
        const TreeGeometry geom(cs.K, c.D);
        const PotentialField field =
            sample_field(c.dist, geom, field_seed(c, static_cast<std::uint64_t>(cs.seed_idx)));
        const ComplexEnergy ze(c.E, cs.eta);
        const ForwardGreenField fwd = forward_sweep(field, geom, ze);
        const GreenColumn col = resolvent_column(geom, fwd);
        const GreenColumn oracle = dense_oracle(field, geom, ze);
        double max_rel = 0.0;
        for (std::size_t x = 0; x < col.g0x.size(); ++x) {
            const double rel = std::abs(col.g0x[x] - oracle.g0x[x]) / std::abs(oracle.g0x[x]);
            max_rel = std::max(max_rel, rel);
        }
        double l2 = 0.0;
        for (const cplx& g : col.g0x) l2 += std::norm(g);
        const double expected = col.g00.imag() / cs.eta;
        rows[static_cast<std::size_t>(i)] = {max_rel, std::abs(l2 - expected) / expected,
                                             min_imag(fwd.gamma)};
    });

    auto os = ctx.open_csv("oracle_diff.csv",
                           "K,D,seed_index,E [energy],eta [energy],max_rel_err [1],"
                           "l2_identity_rel_err [1],min_im_gamma [1/energy]");
    bool ok = true;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const Case& cs = cases[i];
        const Row& r = rows[i];
        write_csv_row(os, {std::to_string(cs.K), std::to_string(c.D), std::to_string(cs.seed_idx),
                           fmt_g(c.E), fmt_g(cs.eta), fmt_g(r.max_rel_err), fmt_g(r.l2_rel_err),
                           fmt_g(r.min_im)});
        ok = ok && r.max_rel_err < c.tol_oracle && r.min_im > 0.0;
    }
    ctx.log << "green-validate: " << cases.size() << " cases, "
            << (ok ? "all within tolerance" : "TOLERANCE EXCEEDED") << "\n";
    return ok ? 0 : 1;
}

// ---- pool-run ----

int run_pool_run(ModeContext& ctx) {
    const ExperimentConfig& c = ctx.config;
    GreenPool pool(c.K, c.dist, ComplexEnergy(c.E, c.eta), c.pool_size, c.seed, c.burnin);
    pool.evolve(c.burnin, ctx.threads);
    const PoolStationarity st = pool.stationarity_probe(c.sweeps, ctx.threads);
    ctx.log << "pool-run: burn-in " << c.burnin << " sweeps, stationarity drift "
            << st.mean_drift_sigmas << " sigma (mean), " << st.var_drift_sigmas
            << " sigma (var)\n";

    const std::vector<cplx> samples = pool.root_samples(c.n_root);

    auto os = ctx.open_csv("estimators.csv",
                           "quantity,value [mixed],std_error [mixed],n_samples,"
                           "E [energy],eta [energy],params");
    auto emit = [&](const std::string& q, double v, double se, std::int64_t n,
                    const std::string& params) {
        write_csv_row(os, {q, fmt_g(v), fmt_g(se), std::to_string(n), fmt_g(c.E), fmt_g(c.eta),
                           params});
    };

    {
        std::vector<double> ims;
        ims.reserve(samples.size());
        for (const cplx& g : samples) ims.push_back(g.imag());
        const MomentEstimate m = mean_stderr(ims);
        emit("mean_im_G", m.mean, m.std_error, m.n_samples, "");
    }
    emit("stationarity_mean_drift_sigma", st.mean_drift_sigmas, 0.0, c.sweeps, "");
    emit("stationarity_var_drift_sigma", st.var_drift_sigmas, 0.0, c.sweeps, "");

    const std::vector<double> xg = c.x_grid.empty() ? default_x_grid() : c.x_grid;
    for (double x : xg) {
        const MomentEstimate F = cdf_im(samples, x);
        emit("F_im", F.mean, F.std_error, F.n_samples, "x=" + fmt_g(x));
    }
    for (double y : xg) {
        const MomentEstimate H = cdf_abs(samples, y);
        emit("H_abs", H.mean, H.std_error, H.n_samples, "y=" + fmt_g(y));
    }
    for (double p : {1.0, 2.0, 3.0}) {
        const MomentEstimate m = inverse_moment(samples, p);
        emit("inv_moment_im", m.mean, m.std_error, m.n_samples,
             "p=" + fmt_g(p) + (m.heavy_tail_flagged ? ";heavy_tail" : ""));
        if (m.heavy_tail_flagged) {
            const auto [tr, ok] = inverse_moment_tail_route(samples, p);
            if (ok)
                emit("inv_moment_im_tail_route", tr.mean, tr.std_error, tr.n_samples,
                     "p=" + fmt_g(p));
        }
    }
    {
        const FPowerLawFit fit = fit_f_power_law(samples);
        if (fit.ok) emit("F_tail_exponent", fit.gamma, fit.gamma_se, c.n_root, "");
    }

    auto fes = ctx.open_csv("free_energy.csv",
                            "s [1],n [steps],log_moment [1],std_error [1],"
                            "slope [1/step],slope_se [1/step],fit_residual [1]");
    std::uint64_t epoch = 0;
    for (double s : c.s_grid) {
        const FreeEnergyEstimate fe = free_energy(pool, s, c.n_range, c.n_paths, epoch++);
        for (const auto& pl : fe.per_length)
            write_csv_row(fes, {fmt_g(s), std::to_string(pl.n), fmt_g(pl.log_moment),
                                fmt_g(pl.std_error), fmt_g(fe.slope), fmt_g(fe.slope_se),
                                fmt_g(fe.fit_residual)});
    }

    save_pool(pool, ctx.dir / "pool.bin");
    ctx.outputs.push_back("pool.bin");
    ctx.outputs.push_back("pool.bin.meta.json");
    return 0;
}

// ---- phase-map ----

int run_phase_map(ModeContext& ctx) {
    const ExperimentConfig& c = ctx.config;
    ClassifyOptions opts;
    opts.pool_size = c.pool_size;
    opts.burnin = c.burnin;
    opts.n_range = c.n_range;
    opts.n_samples = c.n_paths;
    opts.threads = ctx.threads;
    auto os = ctx.open_csv("phase_map.csv",
                           "E [energy],eta [energy],psi_at_one [1/step],sigma [1/step],"
                           "margin [sigma],phase");
    for (std::size_t i = 0; i < c.E_grid.size(); ++i) {
        opts.seed = rng::u64(c.seed, rng::Stream::generic, 0x9a5e, i);
        const PhaseClassification pc =
            phase_classify(c.dist, c.K, c.E_grid[i], c.eta, 0.95, opts);
        const char* phase = pc.phase == Phase::ac_like     ? "ac-like"
                            : pc.phase == Phase::pp_like   ? "pp-like"
                                                           : "undetermined";
        write_csv_row(os, {fmt_g(c.E_grid[i]), fmt_g(c.eta), fmt_g(pc.psi_at_one),
                           fmt_g(pc.sigma), fmt_g(pc.margin), phase});
        ctx.log << "phase-map: E=" << c.E_grid[i] << " -> " << phase << " (margin "
                << pc.margin << ")\n";
    }
    return 0;
}

// ---- dynamics-run ----

int run_dynamics_run(ModeContext& ctx) {
    const ExperimentConfig& c = ctx.config;
    const TreeGeometry geom(c.K, c.D);
    const BallisticCertificate cert = ballistic_certificate(c.K);
    std::vector<double> v_grid = c.v_grid;
    if (v_grid.empty())
        v_grid = {cert.v_hat * 1.03, cert.v_hat * 1.1, cert.v_hat * 1.3, cert.v_hat * 2.0};

    std::vector<TransportReport> reports(static_cast<std::size_t>(c.n_fields));
    parallel_for(c.n_fields, ctx.threads, [&](std::int64_t f) {
        const PotentialField field =
            sample_field(c.dist, geom, field_seed(c, static_cast<std::uint64_t>(f)));
        reports[static_cast<std::size_t>(f)] =
            transport_report(field, geom, c.t_grid, c.beta_grid, v_grid, c.tol_propagate, 1);
    });

    auto pos = ctx.open_csv("profile.csv", "field,t [time],shell,mass [1],contaminated");
    auto mos = ctx.open_csv("moments.csv", "field,t [time],beta [1],M [shells^beta]");
    auto tos = ctx.open_csv("tails.csv",
                            "field,t [time],v [shells/time],tail [1],certificate_bound [1]");
    for (std::int64_t f = 0; f < c.n_fields; ++f) {
        const TransportReport& tr = reports[static_cast<std::size_t>(f)];
        for (std::size_t ti = 0; ti < tr.t_grid.size(); ++ti) {
            const ShellProfile& prof = tr.profiles[ti];
            for (std::size_t n = 0; n < prof.mass.size(); ++n)
                write_csv_row(pos, {std::to_string(f), fmt_g(tr.t_grid[ti]), std::to_string(n),
                                    fmt_g(prof.mass[n]),
                                    prof.boundary_contaminated ? "1" : "0"});
            for (std::size_t bi = 0; bi < tr.betas.size(); ++bi)
                write_csv_row(mos, {std::to_string(f), fmt_g(tr.t_grid[ti]),
                                    fmt_g(tr.betas[bi]), fmt_g(tr.moment_table[ti][bi])});
            if (tr.t_grid[ti] > 0.0)
                for (std::size_t vi = 0; vi < v_grid.size(); ++vi)
                    write_csv_row(tos, {std::to_string(f), fmt_g(tr.t_grid[ti]),
                                        fmt_g(v_grid[vi]), fmt_g(tr.front_tails[ti][vi]),
                                        fmt_g(cert.tail_bound(v_grid[vi], tr.t_grid[ti]))});
        }
    }

    // ensemble ballistic statistics
    std::vector<double> slopes;
    for (const TransportReport& tr : reports)
        if (tr.n_fit_points >= 2) slopes.push_back(tr.ballistic_fit.slope);
    nlohmann::json summary;
    summary["certificate"] = {{"v_hat", cert.v_hat}, {"mu", cert.mu}};
    if (slopes.size() >= 2) {
        const MomentEstimate m = mean_stderr(slopes);
        summary["ballistic_slope"] = {{"mean", m.mean},
                                      {"std_error", m.std_error},
                                      {"ci95", {m.mean - 1.96 * m.std_error,
                                                m.mean + 1.96 * m.std_error}},
                                      {"n_fields", slopes.size()}};
    }
    // boundedness diagnostic: max_t M(1,t) / M(1, t_first) of the ensemble mean
    if (!c.t_grid.empty()) {
        std::vector<double> mbar(c.t_grid.size(), 0.0);
        std::size_t beta1 = 0;
        for (std::size_t bi = 0; bi < c.beta_grid.size(); ++bi)
            if (c.beta_grid[bi] == 1.0) beta1 = bi;
        for (const TransportReport& tr : reports)
            for (std::size_t ti = 0; ti < tr.t_grid.size(); ++ti)
                mbar[ti] += tr.moment_table[ti][beta1] / static_cast<double>(c.n_fields);
        summary["mean_M1"] = mbar;
        double first_positive = 0.0, max_val = 0.0;
        for (std::size_t ti = 0; ti < mbar.size(); ++ti) {
            if (c.t_grid[ti] > 0.0 && first_positive == 0.0) first_positive = mbar[ti];
            max_val = std::max(max_val, mbar[ti]);
        }
        if (first_positive > 0.0) summary["M1_max_over_first"] = max_val / first_positive;
    }
    ctx.write_json("report.json", summary);
    return 0;
}

// ---- hatp-run ----

int run_hatp_run(ModeContext& ctx) {
    const ExperimentConfig& c = ctx.config;
    const TreeGeometry geom(c.K, c.D);
    const EnergyWindow window(c.window_E1, c.window_E2);
    const QuadSpec quad{c.quad_nodes, c.quad_max_nodes, c.quad_rel_tol};

    struct Task {
        std::int64_t field;
        double eta;
    };
    std::vector<Task> tasks;
    for (std::int64_t f = 0; f < c.n_fields; ++f)
        for (double eta : c.eta_grid) tasks.push_back({f, eta});
    std::vector<HatResult> results(tasks.size());
    parallel_for(static_cast<std::int64_t>(tasks.size()), ctx.threads, [&](std::int64_t i) {
        const Task& t = tasks[static_cast<std::size_t>(i)];
        const PotentialField field =
            sample_field(c.dist, geom, field_seed(c, static_cast<std::uint64_t>(t.field)));
        results[static_cast<std::size_t>(i)] = hat_distribution(field, geom, window, t.eta, quad, 1);
    });

    auto pos = ctx.open_csv("hat_profile.csv",
                            "field,eta [energy],shell,mass [1],nodes_used,converged");
    auto sos = ctx.open_csv("hat_summary.csv",
                            "field,eta [energy],total_mass [1],quantity,value [mixed]");
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const Task& t = tasks[i];
        const HatResult& h = results[i];
        for (std::size_t n = 0; n < h.profile.mass.size(); ++n)
            write_csv_row(pos, {std::to_string(t.field), fmt_g(t.eta), std::to_string(n),
                                fmt_g(h.profile.mass[n]), std::to_string(h.nodes_used),
                                h.converged ? "1" : "0"});
        const double total = h.profile.total();
        for (double beta : c.beta_grid)
            write_csv_row(sos, {std::to_string(t.field), fmt_g(t.eta), fmt_g(total),
                                "M_hat_beta=" + fmt_g(beta),
                                fmt_g(hat_moments(h.profile, beta))});
        for (double R : c.b_grid)
            write_csv_row(sos, {std::to_string(t.field), fmt_g(t.eta), fmt_g(total),
                                "lingering_R=" + fmt_g(R), fmt_g(lingering(h.profile, R))});
    }
    return 0;
}

// ---- bounds-check ----

int run_bounds_check(ModeContext& ctx) {
    const ExperimentConfig& c = ctx.config;
    const bool nc = c.negative_control;
    std::vector<BoundReport> reports;

    bool needs_samples = false;
    for (const std::string& ck : c.checks)
        if (ck == "wegner" || ck == "lemma6" || ck == "F_power_law" ||
            ck == "free_energy_apriori")
            needs_samples = true;

    std::optional<GreenPool> pool;
    std::vector<cplx> samples;
    if (needs_samples) {
        pool.emplace(c.K, c.dist, ComplexEnergy(c.E, c.eta), c.pool_size, c.seed, c.burnin);
        pool->evolve(c.burnin, ctx.threads);
        samples = pool->root_samples(c.n_root);
    }

    for (const std::string& ck : c.checks) {
        if (ck == "ballistic_tail") {
            const TreeGeometry geom(c.K, c.D);
            const BallisticCertificate cert = ballistic_certificate(c.K);
            std::vector<double> v_grid = c.v_grid;
            if (v_grid.empty())
                v_grid = {cert.v_hat * 1.03, cert.v_hat * 1.1, cert.v_hat * 1.3,
                          cert.v_hat * 2.0};
            std::vector<double> t_grid = c.t_grid;
            if (t_grid.empty()) t_grid = {1.0, 2.0, 3.0, 4.0};
            std::vector<TransportReport> trs(static_cast<std::size_t>(c.n_fields));
            parallel_for(c.n_fields, ctx.threads, [&](std::int64_t f) {
                const PotentialField field =
                    sample_field(c.dist, geom, field_seed(c, static_cast<std::uint64_t>(f)));
                trs[static_cast<std::size_t>(f)] = transport_report(
                    field, geom, t_grid, c.beta_grid, v_grid, c.tol_propagate, 1);
            });
            reports.push_back(check_ballistic_tail(trs, cert, nc));
        } else if (ck == "second_moment") {
            SecondMomentOptions opts;
            opts.pool_size = c.pool_size;
            opts.burnin = c.burnin;
            opts.n_samples = c.n_paths;
            opts.n_range = c.n_range;
            opts.seed = c.seed;
            opts.threads = ctx.threads;
            const std::vector<double> energies =
                c.E_grid.empty() ? std::vector<double>{c.E} : c.E_grid;
            reports.push_back(
                check_second_moment_decay(c.dist, c.K, energies, c.eta, opts, nc));
        } else if (ck == "free_energy_apriori") {
            std::uint64_t epoch = 1000;
            for (double s : c.s_grid) {
                const FreeEnergyEstimate fe = free_energy(*pool, s, c.n_range, c.n_paths, epoch++);
                reports.push_back(check_free_energy_apriori(fe, nc));
            }
        } else if (ck == "wegner") {
            reports.push_back(check_wegner(samples, c.dist.density_sup(), nc));
        } else if (ck == "lemma6") {
            const std::vector<double> xg = c.x_grid.empty() ? default_x_grid() : c.x_grid;
            const auto pair = check_lemma6(samples, c.dist, c.K, ComplexEnergy(c.E, c.eta), xg, nc);
            reports.insert(reports.end(), pair.begin(), pair.end());
        } else if (ck == "F_power_law") {
            reports.push_back(check_F_power_law(samples, nc));
        } else {
            throw ConfigError("checks: unknown check '" + ck + "'");
        }
    }

    ctx.write_json("bounds.json", bounds_to_json(reports));
    ctx.write_text("bounds.txt", bounds_to_table(reports));
    ctx.log << bounds_to_table(reports);
    for (const BoundReport& r : reports)
        if (r.verdict == Verdict::fail) return 1;
    return 0;
}

// ---- theorem1-scan ----

int run_theorem1_scan(ModeContext& ctx) {
    const ExperimentConfig& c = ctx.config;
    Theorem1Options opts;
    opts.n_fields = c.n_fields;
    opts.quad = QuadSpec{c.quad_nodes, c.quad_max_nodes, c.quad_rel_tol};
    opts.seed = c.seed;
    opts.threads = ctx.threads;
    const EnergyWindow window(c.window_E1, c.window_E2);
    const BoundReport rep = check_theorem1(c.dist, c.K, c.D, window, c.eta_grid, c.b_grid, opts,
                                           c.negative_control);

    auto os = ctx.open_csv("lingering.csv",
                           "eta [energy],b [1],R [shells],mean [1],std_error [1]");
    if (rep.details.contains("per_eta"))
        for (const auto& pe : rep.details["per_eta"])
            for (const auto& pt : pe["points"])
                write_csv_row(os, {fmt_g(pe["eta"].get<double>()), fmt_g(pt["b"].get<double>()),
                                   fmt_g(pt["R"].get<double>()), fmt_g(pt["mean"].get<double>()),
                                   fmt_g(pt["std_error"].get<double>())});
    const std::vector<BoundReport> reports = {rep};
    ctx.write_json("bounds.json", bounds_to_json(reports));
    ctx.write_text("bounds.txt", bounds_to_table(reports));
    ctx.log << bounds_to_table(reports);
    return rep.verdict == Verdict::fail ? 1 : 0;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config, std::ostream& log) {
    validate(config);
    const auto t0 = std::chrono::steady_clock::now();
    ModeContext ctx{config, prepare_dir(config), config.hash(), resolve_threads(config.threads),
                    {}, log};

    int code = 0;
    switch (config.mode) {
        case Mode::green_validate: code = run_green_validate(ctx); break;
        case Mode::pool_run: code = run_pool_run(ctx); break;
        case Mode::phase_map: code = run_phase_map(ctx); break;
        case Mode::dynamics_run: code = run_dynamics_run(ctx); break;
        case Mode::hatp_run: code = run_hatp_run(ctx); break;
        case Mode::bounds_check: code = run_bounds_check(ctx); break;
        case Mode::theorem1_scan: code = run_theorem1_scan(ctx); break;
    }

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(ctx, wall, code);
    RunResult result;
    result.exit_code = code;
    for (const std::string& name : ctx.outputs)
        result.outputs.push_back((ctx.dir / name).string());
    return result;
}

}  // namespace bethe
