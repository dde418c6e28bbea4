#include "bethe/population.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bethe/errors.hpp"
#include "bethe/parallel.hpp"
#include "bethe/rng.hpp"

namespace bethe {

namespace {

// counter slots per draw site: c2 = 0,1 reserved for the potential draw
// (gaussian consumes both), pool-index draws start at c2 = 2
inline cplx pool_draw_sum(std::span<const cplx> entries, std::int64_t k,
                          std::uint64_t seed, rng::Stream stream, std::uint64_t c0,
                          std::uint64_t c1, std::uint64_t first_slot = 2) {
    cplx acc(0.0, 0.0);
    const std::uint64_t n = entries.size();
    for (std::int64_t i = 0; i < k; ++i) {
        const std::uint64_t h = rng::u64(seed, stream, c0, c1, first_slot + static_cast<std::uint64_t>(i));
        acc += entries[rng::index(h, n)];
    }
    return acc;
}

void check_entry(cplx g, const char* where, std::uint64_t c0, std::uint64_t c1) {
    if (!std::isfinite(g.real()) || !std::isfinite(g.imag()))
        throw NumericError(std::string(where) + ": non-finite draw at counter (" +
                           std::to_string(c0) + "," + std::to_string(c1) + ")");
}

}  // namespace

GreenPool::GreenPool(std::int64_t branching, PotentialDistribution dist, ComplexEnergy ze,
                     std::int64_t size, std::uint64_t seed, std::int64_t min_burnin)
    : branching_(branching), dist_(std::move(dist)), ze_(ze), seed_(seed),
      min_burnin_(min_burnin) {
    if (branching < 2) throw std::invalid_argument("GreenPool: branching K must be >= 2");
    if (size < 2) throw std::invalid_argument("GreenPool: pool size must be >= 2");
    // start at the free-Laplacian fixed point: inside the Herglotz domain and
    // already exact for zero disorder
    entries_.assign(static_cast<std::size_t>(size), free_green(branching_, ze_.zeta()));
}

void GreenPool::evolve(std::int64_t sweeps, int threads) {
    if (sweeps < 0) throw std::invalid_argument("GreenPool::evolve: sweeps must be >= 0");
    const std::int64_t n = size();
    const std::int64_t K = branching_;
    std::vector<cplx> next(static_cast<std::size_t>(n));
    for (std::int64_t s = 0; s < sweeps; ++s) {
        const std::uint64_t sweep_ctr = static_cast<std::uint64_t>(sweeps_done_);
        std::span<const cplx> cur(entries_);
        parallel_for(n, threads, [&](std::int64_t i) {
            const std::uint64_t ci = static_cast<std::uint64_t>(i);
            const double v = dist_.sample(seed_, rng::Stream::pool_evolve, sweep_ctr, ci);
            const cplx den = cplx(v, 0.0) - ze_.zeta() -
                             pool_draw_sum(cur, K, seed_, rng::Stream::pool_evolve, sweep_ctr, ci);
            const cplx g = reciprocal(den);
            check_entry(g, "GreenPool::evolve", sweep_ctr, ci);
            next[static_cast<std::size_t>(i)] = g;
        });
        entries_.swap(next);
        ++sweeps_done_;
    }
}

PoolStationarity GreenPool::stationarity_probe(std::int64_t window_sweeps, int threads) {
    if (window_sweeps < 2)
        throw std::invalid_argument("stationarity_probe: need window_sweeps >= 2");
    auto window = [&](std::vector<double>& means, std::vector<double>& vars) {
        for (std::int64_t s = 0; s < window_sweeps; ++s) {
            evolve(1, threads);
            double m = 0.0;
            for (const cplx& g : entries_) m += g.imag();
            m /= static_cast<double>(size());
            double v = 0.0;
            for (const cplx& g : entries_) v += (g.imag() - m) * (g.imag() - m);
            v /= static_cast<double>(size() - 1);
            means.push_back(m);
            vars.push_back(v);
        }
    };
    std::vector<double> m1, v1, m2, v2;
    window(m1, v1);
    window(m2, v2);
    const MomentEstimate em1 = mean_stderr(m1), em2 = mean_stderr(m2);
    const MomentEstimate ev1 = mean_stderr(v1), ev2 = mean_stderr(v2);
    PoolStationarity st;
    st.mean_im_first = em1.mean;
    st.mean_im_second = em2.mean;
    const double se_m = std::hypot(em1.std_error, em2.std_error);
    const double se_v = std::hypot(ev1.std_error, ev2.std_error);
    st.mean_drift_sigmas = se_m > 0.0 ? std::abs(em1.mean - em2.mean) / se_m : 0.0;
    st.var_drift_sigmas = se_v > 0.0 ? std::abs(ev1.mean - ev2.mean) / se_v : 0.0;
    st.stationary = st.mean_drift_sigmas < 2.0 && st.var_drift_sigmas < 2.0;
    return st;
}

std::vector<cplx> GreenPool::root_samples(std::int64_t n, std::uint64_t epoch) const {
    if (!stationary())
        throw std::logic_error("GreenPool::root_samples: pool not past burn-in");
    std::vector<cplx> out(static_cast<std::size_t>(n));
    std::span<const cplx> cur(entries_);
    for (std::int64_t i = 0; i < n; ++i) {
        const std::uint64_t ci = static_cast<std::uint64_t>(i);
        const double v = dist_.sample(seed_, rng::Stream::pool_root, epoch, ci);
        const cplx den = cplx(v, 0.0) - ze_.zeta() -
                         pool_draw_sum(cur, branching_, seed_, rng::Stream::pool_root, epoch, ci);
        const cplx g = reciprocal(den);
        check_entry(g, "GreenPool::root_samples", epoch, ci);
        out[static_cast<std::size_t>(i)] = g;
    }
    return out;
}

void GreenPool::reset_entries(cplx value) {
    std::fill(entries_.begin(), entries_.end(), value);
    sweeps_done_ = 0;
}

void GreenPool::restore(std::vector<cplx> entries, std::int64_t sweeps_done) {
    if (entries.size() < 2) throw std::invalid_argument("GreenPool::restore: pool too small");
    entries_ = std::move(entries);
    sweeps_done_ = sweeps_done;
}

MomentEstimate cdf_im(std::span<const cplx> samples, double x) {
    if (x < 0.0) throw std::invalid_argument("cdf_im: x must be >= 0");
    std::int64_t c = 0;
    for (const cplx& g : samples) c += (g.imag() <= x) ? 1 : 0;
    const auto n = static_cast<double>(samples.size());
    MomentEstimate e;
    e.mean = static_cast<double>(c) / n;
    e.std_error = std::sqrt(e.mean * (1.0 - e.mean) / n);
    e.n_samples = static_cast<std::int64_t>(samples.size());
    return e;
}

MomentEstimate cdf_abs(std::span<const cplx> samples, double y) {
    if (y < 0.0) throw std::invalid_argument("cdf_abs: y must be >= 0");
    std::int64_t c = 0;
    for (const cplx& g : samples) c += (std::abs(g) <= y) ? 1 : 0;
    const auto n = static_cast<double>(samples.size());
    MomentEstimate e;
    e.mean = static_cast<double>(c) / n;
    e.std_error = std::sqrt(e.mean * (1.0 - e.mean) / n);
    e.n_samples = static_cast<std::int64_t>(samples.size());
    return e;
}

MomentEstimate inverse_moment(std::span<const cplx> samples, double p) {
    if (p < 0.0) throw std::invalid_argument("inverse_moment: p must be >= 0");
    if (p == 0.0) {
        MomentEstimate e;
        e.mean = 1.0;
        e.n_samples = static_cast<std::int64_t>(samples.size());
        return e;
    }
    std::vector<double> vals;
    vals.reserve(samples.size());
    for (const cplx& g : samples) vals.push_back(std::exp(-p * std::log(g.imag())));
    MomentEstimate e = mean_stderr(vals);
    e.heavy_tail_flagged = e.max_share > 0.10;
    return e;
}

FPowerLawFit fit_f_power_law(std::span<const cplx> samples, int n_points,
                             std::int64_t min_count) {
    FPowerLawFit fit;
    if (n_points < 2 || static_cast<std::int64_t>(samples.size()) < 10 * min_count) {
        fit.reason = "too few samples";
        return fit;
    }
    std::vector<double> ims;
    ims.reserve(samples.size());
    for (const cplx& g : samples) ims.push_back(g.imag());
    std::sort(ims.begin(), ims.end());
    // the smallest x with >= min_count hits anchors the resolvable decade
    const double x_lo = ims[static_cast<std::size_t>(min_count - 1)];
    if (!(x_lo > 0.0)) {
        fit.reason = "non-positive lower tail";
        return fit;
    }
    const double x_hi = 10.0 * x_lo;
    const auto n = static_cast<double>(ims.size());
    for (int i = 0; i < n_points; ++i) {
        const double x = x_lo * std::pow(10.0, static_cast<double>(i) / (n_points - 1));
        const auto it = std::upper_bound(ims.begin(), ims.end(), x);
        const double F = static_cast<double>(it - ims.begin()) / n;
        fit.xs.push_back(x);
        fit.fs.push_back(F);
        fit.ses.push_back(std::sqrt(F * (1.0 - F) / n));
    }
    if (fit.fs.back() >= 0.5) {
        fit.reason = "no resolvable lower tail (degenerate distribution)";
        return fit;
    }
    std::vector<double> lx, lf, ls;
    for (std::size_t i = 0; i < fit.xs.size(); ++i) {
        lx.push_back(std::log(fit.xs[i]));
        lf.push_back(std::log(fit.fs[i]));
        ls.push_back(fit.ses[i] / fit.fs[i]);
    }
    const LinearFit lin = fit_linear_weighted(lx, lf, ls);
    fit.gamma = lin.slope;
    fit.gamma_se = lin.slope_se;
    fit.log_c = lin.intercept;
    fit.ok = true;
    (void)x_hi;
    return fit;
}

std::pair<MomentEstimate, bool> inverse_moment_tail_route(std::span<const cplx> samples,
                                                          double p) {
    if (!(p > 0.0)) throw std::invalid_argument("inverse_moment_tail_route: p must be > 0");
    const FPowerLawFit fit = fit_f_power_law(samples);
    MomentEstimate e;
    e.n_samples = static_cast<std::int64_t>(samples.size());
    if (!fit.ok || fit.gamma <= p) return {e, false};
    const double x0 = fit.xs.back();
    // modeled head: int_0^{x0} y^{-p} dF with F = C x^gamma
    const double c = std::exp(fit.log_c);
    const double head = c * fit.gamma / (fit.gamma - p) * std::pow(x0, fit.gamma - p);
    std::vector<double> tail_vals;
    tail_vals.reserve(samples.size());
    for (const cplx& g : samples)
        tail_vals.push_back(g.imag() > x0 ? std::exp(-p * std::log(g.imag())) : 0.0);
    const MomentEstimate tail = mean_stderr(tail_vals);
    e.mean = head + tail.mean;
    e.std_error = tail.std_error + std::abs(head) * (fit.gamma_se * std::abs(std::log(x0)));
    return {e, true};
}

MomentEstimate fractional_path_moment(const GreenPool& pool, double s, std::int64_t n,
                                      std::int64_t n_samples, std::uint64_t epoch) {
    if (!(s > 0.0) || s > 2.0)
        throw std::invalid_argument("fractional_path_moment: s must be in (0, 2]");
    if (n < 1) throw std::invalid_argument("fractional_path_moment: n must be >= 1");
    if (n >= (1 << 16) || epoch >= (1ULL << 32))
        throw std::invalid_argument("fractional_path_moment: n or epoch out of counter range");
    if (!pool.stationary())
        throw std::logic_error("fractional_path_moment: pool not past burn-in");

    const std::int64_t K = pool.branching();
    const cplx zeta = pool.energy().zeta();
    const PotentialDistribution& dist = pool.dist();
    const std::uint64_t seed = pool.seed();
    std::span<const cplx> cur = pool.entries();

    auto c0_of = [&](std::int64_t j) {
        return (epoch << 32) | (static_cast<std::uint64_t>(n) << 16) |
               static_cast<std::uint64_t>(j);
    };

    std::vector<double> vals(static_cast<std::size_t>(n_samples));
    for (std::int64_t i = 0; i < n_samples; ++i) {
        const std::uint64_t ci = static_cast<std::uint64_t>(i);
        // far end of the path: all K subtrees come from the pool
        double log_abs = 0.0;
        cplx gamma_next;
        {
            const std::uint64_t c0 = c0_of(n);
            const double v = dist.sample(seed, rng::Stream::path_moment, c0, ci);
            gamma_next = reciprocal(cplx(v, 0.0) - zeta -
                                    pool_draw_sum(cur, K, seed, rng::Stream::path_moment, c0, ci));
            log_abs += std::log(std::abs(gamma_next));
        }
        // walk back to the root; one child is on the path, K-1 off-path
        for (std::int64_t j = n - 1; j >= 1; --j) {
            const std::uint64_t c0 = c0_of(j);
            const double v = dist.sample(seed, rng::Stream::path_moment, c0, ci);
            gamma_next = reciprocal(
                cplx(v, 0.0) - zeta - gamma_next -
                pool_draw_sum(cur, K - 1, seed, rng::Stream::path_moment, c0, ci));
            log_abs += std::log(std::abs(gamma_next));
        }
        // root: K children, one of them the path
        {
            const std::uint64_t c0 = c0_of(0);
            const double v = dist.sample(seed, rng::Stream::path_moment, c0, ci);
            const cplx g00 = reciprocal(
                cplx(v, 0.0) - zeta - gamma_next -
                pool_draw_sum(cur, K - 1, seed, rng::Stream::path_moment, c0, ci));
            log_abs += std::log(std::abs(g00));
        }
        const double sample = std::exp(s * log_abs);
        if (!std::isfinite(sample))
            throw NumericError("fractional_path_moment: non-finite |G|^s sample at index " +
                               std::to_string(i));
        vals[static_cast<std::size_t>(i)] = sample;
    }
    MomentEstimate e = mean_stderr(vals);
    e.heavy_tail_flagged = e.max_share > 0.10;
    return e;
}

FreeEnergyEstimate free_energy(const GreenPool& pool, double s,
                               std::span<const std::int64_t> n_range,
                               std::int64_t n_samples, std::uint64_t epoch,
                               double residual_threshold) {
    if (n_range.size() < 4)
        throw std::invalid_argument("free_energy: n_range needs >= 4 lengths");
    if (*std::max_element(n_range.begin(), n_range.end()) < 20)
        throw std::invalid_argument("free_energy: max path length must be >= 20");
    FreeEnergyEstimate fe;
    fe.s = s;
    fe.ze = pool.energy();
    fe.branching = pool.branching();
    std::vector<double> xs, ys, sigmas;
    for (std::int64_t n : n_range) {
        double logm = 0.0, se = 0.0;
        if (s == 0.0) {
            // all moments are exactly 1
        } else {
            const MomentEstimate m = fractional_path_moment(pool, s, n, n_samples, epoch);
            logm = std::log(m.mean);
            se = m.std_error / m.mean;
        }
        fe.per_length.push_back({n, logm, se});
        xs.push_back(static_cast<double>(n));
        ys.push_back(logm);
        sigmas.push_back(std::max(se, 1e-12));
    }
    const LinearFit fit = fit_linear_weighted(xs, ys, sigmas);
    fe.slope = fit.slope;
    fe.slope_se = fit.slope_se;
    fe.intercept = fit.intercept;
    fe.intercept_se = fit.intercept_se;
    fe.cov_si = fit.cov_si;
    fe.fit_residual = fit.chi2_dof;
    fe.low_confidence = fit.chi2_dof > residual_threshold;
    return fe;
}

PhaseClassification phase_classify(const PotentialDistribution& dist, std::int64_t branching,
                                   double E, double eta_probe, double s_top,
                                   const ClassifyOptions& opts) {
    if (!(s_top < 1.0) || !(s_top > 0.0))
        throw std::invalid_argument("phase_classify: s_top must be in (0, 1)");
    const double logK = std::log(static_cast<double>(branching));
    GreenPool pool(branching, dist, ComplexEnergy(E, eta_probe), opts.pool_size, opts.seed,
                   opts.burnin);
    pool.evolve(opts.burnin, opts.threads);

    std::vector<double> s_grid = {0.7, 0.8, 0.9, s_top};
    std::sort(s_grid.begin(), s_grid.end());
    s_grid.erase(std::unique(s_grid.begin(), s_grid.end()), s_grid.end());

    PhaseClassification out;
    std::vector<double> xs, ys, sigmas;
    std::uint64_t epoch = 0;
    for (double s : s_grid) {
        const FreeEnergyEstimate fe =
            free_energy(pool, s, opts.n_range, opts.n_samples, epoch++);
        const double psi = fe.slope + s * logK;
        out.points.push_back({s, psi, fe.slope_se});
        xs.push_back(s);
        ys.push_back(psi);
        sigmas.push_back(std::max(fe.slope_se, 1e-12));
    }
    const LinearFit lin = fit_linear_weighted(xs, ys, sigmas);
    const double psi1_lin = lin.intercept + lin.slope;
    const double var_lin = lin.intercept_se * lin.intercept_se +
                           lin.slope_se * lin.slope_se + 2.0 * lin.cov_si;

    // quadratic extrapolation difference quantifies the s -> 1 trend risk
    double psi1_quad = psi1_lin;
    if (xs.size() >= 3) {
        Eigen::MatrixXd A(static_cast<std::int64_t>(xs.size()), 3);
        Eigen::VectorXd b(static_cast<std::int64_t>(xs.size()));
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double w = 1.0 / sigmas[i];
            A(static_cast<std::int64_t>(i), 0) = w;
            A(static_cast<std::int64_t>(i), 1) = w * xs[i];
            A(static_cast<std::int64_t>(i), 2) = w * xs[i] * xs[i];
            b(static_cast<std::int64_t>(i)) = w * ys[i];
        }
        const Eigen::Vector3d coef = A.colPivHouseholderQr().solve(b);
        psi1_quad = coef(0) + coef(1) + coef(2);
    }
    const double spread = std::abs(psi1_lin - psi1_quad);

    out.psi_at_one = psi1_lin;
    out.sigma = std::sqrt(std::max(var_lin, 0.0) + spread * spread);
    out.margin = out.sigma > 0.0 ? out.psi_at_one / out.sigma : 0.0;
    if (out.margin >= 2.0)
        out.phase = Phase::ac_like;
    else if (out.margin <= -2.0)
        out.phase = Phase::pp_like;
    else
        out.phase = Phase::undetermined;
    return out;
}

}  // namespace bethe
