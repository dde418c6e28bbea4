#pragma once

#include <cstdint>
#include <vector>

#include "bethe/green.hpp"
#include "bethe/stats.hpp"

namespace bethe {

// complex amplitude vector over the truncated tree
struct WavePacket {
    std::vector<cplx> amplitudes;
    double time = 0.0;
    double norm_drift = 0.0;  // | ||psi|| - ||psi_0|| |
};

enum class ProfileTag { time, eta };

// radial marginal: per-shell probability mass
struct ShellProfile {
    std::vector<double> mass;  // length D+1
    double tag_value = 0.0;    // the time t or the broadening eta
    ProfileTag tag = ProfileTag::time;
    bool boundary_contaminated = false;  // > 1e-6 mass in the last two shells

    double total() const {
        double s = 0.0;
        for (double m : mass) s += m;
        return s;
    }
};

// indicator energy window: |f(E)|^2 = 1 on [E1, E2], 0 outside
struct EnergyWindow {
    double E1, E2;
    EnergyWindow(double e1, double e2) : E1(e1), E2(e2) {
        if (!(E1 < E2)) throw std::invalid_argument("EnergyWindow: need E1 < E2");
    }
};

WavePacket delta_packet(const TreeGeometry& geometry);

// [a, b] containing spec(H) for the realized field (Gershgorin: degree bound
// plus realized potential range)
std::pair<double, double> spectral_bounds(const PotentialField& field,
                                          const TreeGeometry& geometry);

// out = (H - c) * in / R, matrix-free over shell blocks
void apply_hamiltonian_scaled(const PotentialField& field, const TreeGeometry& geometry,
                              std::span<const cplx> in, std::span<cplx> out, double center,
                              double inv_halfwidth);

// psi_t = e^{-itH} psi0 by Chebyshev expansion of the propagator, each grid
// time computed independently of the others; zero (Dirichlet) truncation.
// Coefficients are truncated once below tol; tol must lie in (1e-14, 1e-6).
std::vector<WavePacket> propagate(const PotentialField& field, const TreeGeometry& geometry,
                                  const WavePacket& psi0, std::span<const double> t_grid,
                                  double tol = 1e-10, int threads = 1);

ShellProfile shell_profile(const TreeGeometry& geometry, const WavePacket& psi);

// M(beta) = sum_n n^beta * profile[n], with 0^0 = 1
double moments(const ShellProfile& profile, double beta);

// Pr(d > v t) = sum_{n > v t} profile[n]
double front_tail(const ShellProfile& profile, double v, double t);

// sum_{n < R} profile[n]
double lingering(const ShellProfile& profile, double R);

inline double hat_moments(const ShellProfile& profile, double beta) {
    return moments(profile, beta);
}

struct QuadSpec {
    int nodes = 64;        // starting Gauss-Legendre node count (>= 32)
    int max_nodes = 1024;  // auto-doubling cap
    double rel_tol = 1e-4; // per-shell convergence between n and 2n nodes
};

struct HatResult {
    ShellProfile profile;
    int nodes_used = 0;
    bool converged = true;  // false when the node cap was hit first
};

// Time-averaged shell distribution via the resolvent quadrature
//   K(x) = (eta/pi) int_{E1}^{E2} |G(x,0;E+i eta)|^2 dE,
// Gauss-Legendre over the window with node doubling until every shell mass
// is stable to rel_tol.
HatResult hat_distribution(const PotentialField& field, const TreeGeometry& geometry,
                           const EnergyWindow& window, double eta, const QuadSpec& quad = {},
                           int threads = 1);

// everything a dynamics run reports for one disorder realization
struct TransportReport {
    std::vector<double> t_grid;
    std::vector<ShellProfile> profiles;
    std::vector<double> betas;
    std::vector<std::vector<double>> moment_table;  // [time][beta]
    std::vector<double> v_grid;
    std::vector<std::vector<double>> front_tails;   // [time][v]
    LinearFit ballistic_fit;                        // M(1,t) vs t, clean points only
    std::int64_t n_fit_points = 0;
};

TransportReport transport_report(const PotentialField& field, const TreeGeometry& geometry,
                                 std::span<const double> t_grid, std::span<const double> betas,
                                 std::span<const double> v_grid, double tol = 1e-10,
                                 int threads = 1);

}  // namespace bethe
