#include "bethe/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bethe/errors.hpp"
#include "bethe/parallel.hpp"

namespace bethe {

namespace {

double packet_norm(std::span<const cplx> amp) {
    double s = 0.0;
    for (const cplx& a : amp) s += std::norm(a);
    return std::sqrt(s);
}

// Chebyshev coefficients of e^{-i tau x} on [-1,1]:
//   c_k = (2 - delta_{k0}) (-i)^k J_k(tau)
std::vector<cplx> chebyshev_coeffs(double tau, double tol) {
    std::vector<cplx> coeffs;
    const cplx mi(0.0, -1.0);
    cplx phase(1.0, 0.0);
    int consecutive_small = 0;
    const int k_cap = static_cast<int>(tau) + 600;
    for (int k = 0;; ++k) {
        const double jk = std::cyl_bessel_j(static_cast<double>(k), tau);
        const double mag = (k == 0 ? 1.0 : 2.0) * std::abs(jk);
        coeffs.push_back((k == 0 ? 1.0 : 2.0) * phase * jk);
        phase *= mi;
        if (static_cast<double>(k) > tau && mag < 0.1 * tol)
            ++consecutive_small;
        else
            consecutive_small = 0;
        if (consecutive_small >= 6 && k >= 8) break;
        if (k > k_cap)
            throw NumericError("propagate: Chebyshev series did not truncate (tau = " +
                               std::to_string(tau) + ")");
    }
    return coeffs;
}

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(static_cast<std::size_t>(n), 0.0);
    w.assign(static_cast<std::size_t>(n), 0.0);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[static_cast<std::size_t>(i)] = -z;
        x[static_cast<std::size_t>(n - 1 - i)] = z;
        w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[static_cast<std::size_t>(n - 1 - i)] = w[static_cast<std::size_t>(i)];
    }
}

}  // namespace

WavePacket delta_packet(const TreeGeometry& geometry) {
    WavePacket p;
    p.amplitudes.assign(static_cast<std::size_t>(geometry.vertex_count()), cplx(0.0, 0.0));
    p.amplitudes[0] = cplx(1.0, 0.0);
    return p;
}

std::pair<double, double> spectral_bounds(const PotentialField& field,
                                          const TreeGeometry& geometry) {
    double vmin = 0.0, vmax = 0.0;
    for (double v : field.values) {
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
    }
    const double deg = static_cast<double>(geometry.branching()) + 1.0;
    return {vmin - deg, vmax + deg};
}

void apply_hamiltonian_scaled(const PotentialField& field, const TreeGeometry& geometry,
                              std::span<const cplx> in, std::span<cplx> out, double center,
                              double inv_halfwidth) {
    const std::int64_t N = geometry.vertex_count();
    const std::int64_t K = geometry.branching();
    const std::int64_t D = geometry.depth();
    const double* V = field.values.data();
    for (std::int64_t x = 0; x < N; ++x)
        out[static_cast<std::size_t>(x)] = (V[x] - center) * in[static_cast<std::size_t>(x)];
    for (std::int64_t n = 1; n <= D; ++n) {
        const std::int64_t plo = geometry.shell_start(n - 1);
        const std::int64_t phi = geometry.shell_start(n);
        std::int64_t child = phi;
        for (std::int64_t p = plo; p < phi; ++p) {
            cplx acc(0.0, 0.0);
            const cplx pin = in[static_cast<std::size_t>(p)];
            for (std::int64_t i = 0; i < K; ++i, ++child) {
                acc += in[static_cast<std::size_t>(child)];
                out[static_cast<std::size_t>(child)] -= pin;
            }
            out[static_cast<std::size_t>(p)] -= acc;
        }
    }
    for (std::int64_t x = 0; x < N; ++x) out[static_cast<std::size_t>(x)] *= inv_halfwidth;
}

std::vector<WavePacket> propagate(const PotentialField& field, const TreeGeometry& geometry,
                                  const WavePacket& psi0, std::span<const double> t_grid,
                                  double tol, int threads) {
    if (!(tol > 1e-14 && tol < 1e-6))
        throw std::invalid_argument("propagate: tol must lie in (1e-14, 1e-6)");
    const auto [a, b] = spectral_bounds(field, geometry);
    const double center = 0.5 * (a + b);
    const double halfwidth = 0.5 * (b - a);
    const double norm0 = packet_norm(psi0.amplitudes);
    const std::size_t N = psi0.amplitudes.size();
    if (N != static_cast<std::size_t>(geometry.vertex_count()))
        throw std::invalid_argument("propagate: packet size does not match geometry");

    std::vector<WavePacket> out(t_grid.size());
    parallel_for(static_cast<std::int64_t>(t_grid.size()), threads, [&](std::int64_t ti) {
        const double t = t_grid[static_cast<std::size_t>(ti)];
        if (t < 0.0) throw std::invalid_argument("propagate: negative time");
        WavePacket& pk = out[static_cast<std::size_t>(ti)];
        pk.time = t;
        if (t == 0.0) {
            pk.amplitudes = psi0.amplitudes;
            pk.norm_drift = 0.0;
            return;
        }
        const double tau = t * halfwidth;
        const std::vector<cplx> coeffs = chebyshev_coeffs(tau, tol);
        // global phase from the spectral shift
        const cplx shift_phase = std::exp(cplx(0.0, -t * center));

        std::vector<cplx> tkm1 = psi0.amplitudes;  // T_0 psi
        std::vector<cplx> tk(N), acc(N), tmp(N);
        apply_hamiltonian_scaled(field, geometry, tkm1, tk, center, 1.0 / halfwidth);  // T_1 psi
        for (std::size_t x = 0; x < N; ++x)
            acc[x] = coeffs[0] * tkm1[x] + (coeffs.size() > 1 ? coeffs[1] * tk[x] : cplx(0.0));
        for (std::size_t k = 2; k < coeffs.size(); ++k) {
            // T_k = 2 H~ T_{k-1} - T_{k-2}
            apply_hamiltonian_scaled(field, geometry, tk, tmp, center, 1.0 / halfwidth);
            for (std::size_t x = 0; x < N; ++x) {
                const cplx tkx = 2.0 * tmp[x] - tkm1[x];
                tkm1[x] = tk[x];
                tk[x] = tkx;
                acc[x] += coeffs[k] * tkx;
            }
        }
        for (std::size_t x = 0; x < N; ++x) acc[x] *= shift_phase;
        pk.amplitudes = std::move(acc);
        pk.norm_drift = std::abs(packet_norm(pk.amplitudes) - norm0);
        if (!(pk.norm_drift < std::max(1e-8, 50.0 * tol)))
            throw NumericError("propagate: norm drift " + std::to_string(pk.norm_drift) +
                               " at t = " + std::to_string(t));
    });
    return out;
}

ShellProfile shell_profile(const TreeGeometry& geometry, const WavePacket& psi) {
    ShellProfile prof;
    prof.tag = ProfileTag::time;
    prof.tag_value = psi.time;
    const std::int64_t D = geometry.depth();
    prof.mass.assign(static_cast<std::size_t>(D) + 1, 0.0);
    for (std::int64_t n = 0; n <= D; ++n) {
        const std::int64_t lo = geometry.shell_start(n);
        const std::int64_t hi = geometry.shell_start(n + 1);
        double s = 0.0;
        for (std::int64_t x = lo; x < hi; ++x) s += std::norm(psi.amplitudes[static_cast<std::size_t>(x)]);
        prof.mass[static_cast<std::size_t>(n)] = s;
    }
    const double tail = prof.mass[static_cast<std::size_t>(D)] +
                        (D >= 1 ? prof.mass[static_cast<std::size_t>(D - 1)] : 0.0);
    prof.boundary_contaminated = tail > 1e-6;
    return prof;
}

double moments(const ShellProfile& profile, double beta) {
    double acc = 0.0;
    for (std::size_t n = 0; n < profile.mass.size(); ++n) {
        const double nb = (n == 0) ? (beta == 0.0 ? 1.0 : 0.0)
                                   : std::pow(static_cast<double>(n), beta);
        acc += nb * profile.mass[n];
    }
    return acc;
}

double front_tail(const ShellProfile& profile, double v, double t) {
    if (!(t > 0.0)) throw std::invalid_argument("front_tail: t must be > 0");
    const double cut = v * t;
    double acc = 0.0;
    for (std::size_t n = 0; n < profile.mass.size(); ++n)
        if (static_cast<double>(n) > cut) acc += profile.mass[n];
    return acc;
}

double lingering(const ShellProfile& profile, double R) {
    if (R < 0.0) throw std::invalid_argument("lingering: R must be >= 0");
    double acc = 0.0;
    for (std::size_t n = 0; n < profile.mass.size(); ++n)
        if (static_cast<double>(n) < R) acc += profile.mass[n];
    return acc;
}

HatResult hat_distribution(const PotentialField& field, const TreeGeometry& geometry,
                           const EnergyWindow& window, double eta, const QuadSpec& quad,
                           int threads) {
    if (!(eta > 0.0 && eta <= 1.0))
        throw std::invalid_argument("hat_distribution: eta must lie in (0, 1]");
    if (quad.nodes < 32) throw std::invalid_argument("hat_distribution: need >= 32 nodes");
    const std::int64_t D = geometry.depth();

    auto run = [&](int nodes) {
        std::vector<double> gx, gw;
        gauss_legendre(nodes, gx, gw);
        const double mid = 0.5 * (window.E1 + window.E2);
        const double half = 0.5 * (window.E2 - window.E1);
        // per-node shell sums, reduced in node order afterwards
        std::vector<std::vector<double>> node_mass(static_cast<std::size_t>(nodes));
        parallel_for(nodes, threads, [&](std::int64_t j) {
            thread_local ForwardGreenField fwd;
            thread_local GreenColumn col;
            const double E = mid + half * gx[static_cast<std::size_t>(j)];
            forward_sweep_into(field, geometry, ComplexEnergy(E, eta), fwd);
            resolvent_column_into(geometry, fwd, col);
            std::vector<double>& m = node_mass[static_cast<std::size_t>(j)];
            m.assign(static_cast<std::size_t>(D) + 1, 0.0);
            for (std::int64_t n = 0; n <= D; ++n) {
                const std::int64_t lo = geometry.shell_start(n);
                const std::int64_t hi = geometry.shell_start(n + 1);
                double s = 0.0;
                for (std::int64_t x = lo; x < hi; ++x)
                    s += std::norm(col.g0x[static_cast<std::size_t>(x)]);
                m[static_cast<std::size_t>(n)] = s;
            }
        });
        std::vector<double> mass(static_cast<std::size_t>(D) + 1, 0.0);
        for (int j = 0; j < nodes; ++j)
            for (std::size_t n = 0; n < mass.size(); ++n)
                mass[n] += gw[static_cast<std::size_t>(j)] * node_mass[static_cast<std::size_t>(j)][n];
        const double scale = half * eta / M_PI;
        for (double& m : mass) m *= scale;
        return mass;
    };

    int nodes = std::max(quad.nodes, 32);
    std::vector<double> cur = run(nodes);
    bool converged = false;
    while (true) {
        if (2 * nodes > quad.max_nodes) break;
        std::vector<double> fine = run(2 * nodes);
        double total = 0.0;
        for (double m : fine) total += m;
        const double floor = 1e-14 * std::max(total, 1e-300);
        bool ok = true;
        for (std::size_t n = 0; n < fine.size(); ++n) {
            const double ref = std::max(fine[n], floor);
            if (std::abs(fine[n] - cur[n]) > quad.rel_tol * ref) {
                ok = false;
                break;
            }
        }
        cur = std::move(fine);
        nodes *= 2;
        if (ok) {
            converged = true;
            break;
        }
    }

    HatResult result;
    result.nodes_used = nodes;
    result.converged = converged;
    result.profile.mass = std::move(cur);
    result.profile.tag = ProfileTag::eta;
    result.profile.tag_value = eta;
    const double tail = result.profile.mass[static_cast<std::size_t>(D)] +
                        (D >= 1 ? result.profile.mass[static_cast<std::size_t>(D - 1)] : 0.0);
    result.profile.boundary_contaminated = tail > 1e-6;
    return result;
}

TransportReport transport_report(const PotentialField& field, const TreeGeometry& geometry,
                                 std::span<const double> t_grid, std::span<const double> betas,
                                 std::span<const double> v_grid, double tol, int threads) {
    TransportReport rep;
    rep.t_grid.assign(t_grid.begin(), t_grid.end());
    rep.betas.assign(betas.begin(), betas.end());
    rep.v_grid.assign(v_grid.begin(), v_grid.end());

    const WavePacket psi0 = delta_packet(geometry);
    const std::vector<WavePacket> packets = propagate(field, geometry, psi0, t_grid, tol, threads);

    std::vector<double> fit_t, fit_m;
    for (const WavePacket& pk : packets) {
        const ShellProfile prof = shell_profile(geometry, pk);
        std::vector<double> mrow;
        for (double beta : betas) mrow.push_back(moments(prof, beta));
        std::vector<double> trow;
        if (pk.time > 0.0)
            for (double v : v_grid) trow.push_back(front_tail(prof, v, pk.time));
        else
            trow.assign(v_grid.size(), 0.0);
        if (!prof.boundary_contaminated && pk.time > 0.0) {
            fit_t.push_back(pk.time);
            fit_m.push_back(moments(prof, 1.0));
        }
        rep.profiles.push_back(prof);
        rep.moment_table.push_back(std::move(mrow));
        rep.front_tails.push_back(std::move(trow));
    }
    rep.n_fit_points = static_cast<std::int64_t>(fit_t.size());
    if (fit_t.size() >= 2) rep.ballistic_fit = fit_linear(fit_t, fit_m);
    return rep;
}

}  // namespace bethe
