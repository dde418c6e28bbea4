#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bethe/dynamics.hpp"
#include "bethe/population.hpp"

namespace bethe {

// Universal speed certificate for H = -A + V on the tree: with the
// exponential weight g(alpha) = sup_x sum_y |A(x,y)| e^{alpha d(x,y)}
// = (K+1) e^alpha, the front obeys Pr(d > vt) <= e^{-mu t (v - v_hat)}
// where v_hat = min_{alpha>0} g(alpha)/alpha and mu is the minimizer.
struct BallisticCertificate {
    std::int64_t branching = 2;
    double v_hat = 0.0;  // (K+1) e
    double mu = 0.0;     // 1

    double g(double alpha) const {
        return (static_cast<double>(branching) + 1.0) * std::exp(alpha);
    }
    double tail_bound(double v, double t) const {
        return std::exp(-mu * t * (v - v_hat));
    }
};

// numeric minimization cross-checked against the closed form to 1e-8
BallisticCertificate ballistic_certificate(std::int64_t branching);

enum class BoundId {
    ballistic_tail,
    second_moment_decay,
    free_energy_apriori,
    wegner,
    lemma6_1,
    lemma6_2,
    theorem1_lingering,
    F_power_law,
};

enum class Verdict { pass, fail, inconclusive };

std::string to_string(BoundId id);
std::string to_string(Verdict v);

// Per-inequality verdict.  margin is measured in combined standard errors
// for statistical checks and in log-units of headroom for pathwise ones;
// the verdict is a deterministic function of margin and the configured
// confidence.  reference states the inequality that was checked.
struct BoundReport {
    BoundId id;
    std::string inputs_digest;
    double estimate = 0.0;
    double threshold = 0.0;
    double margin = 0.0;
    Verdict verdict = Verdict::inconclusive;
    std::string reference;
    std::string note;
    nlohmann::json details;
};

nlohmann::json bounds_to_json(std::span<const BoundReport> reports);
std::string bounds_to_table(std::span<const BoundReport> reports);

// ---- checks ----

// pathwise: front_tail(v, t) <= e^{-mu t (v - v_hat)} for every grid v >
// v_hat and every clean time point, over all supplied realizations
BoundReport check_ballistic_tail(std::span<const TransportReport> reports,
                                 const BallisticCertificate& cert,
                                 bool negative_control = false);

struct SecondMomentOptions {
    std::int64_t pool_size = 200000;
    std::int64_t burnin = 100;
    std::int64_t n_samples = 100000;
    std::vector<std::int64_t> n_range = {5, 10, 15, 20, 25};
    std::uint64_t seed = 1;
    int threads = 1;
    bool window_ac_classified = true;
};

// slope of log(K^n E|G(0,x_n)|^2) vs n is <= 0 within 3 sigma at each energy
BoundReport check_second_moment_decay(const PotentialDistribution& dist, std::int64_t branching,
                                      std::span<const double> energies, double eta,
                                      const SecondMomentOptions& opts = {},
                                      bool negative_control = false);

// a-priori free-energy bound phi(s;zeta) <= -(s/2) log K for s in [0,2],
// checked as slope + (s/2) log K <= 3 * fit std error
BoundReport check_free_energy_apriori(const FreeEnergyEstimate& fe,
                                      bool negative_control = false);

// smoothed local DOS bound: E[Im G(0,0;E+i eta)]/pi <= ||rho||_inf within
// 3 sigma (reference-constant form of the spectral-averaging estimate)
BoundReport check_wegner(std::span<const cplx> samples, double rho_sup,
                         bool negative_control = false);

// distribution-function inequalities, checked with 4 sigma slack at each
// admissible grid point:
//   (1) H(x) <= P(|V| >= 1/(4x)) + K P(|G| >= 1/(2Kx))   for |zeta| <= 1/(4x)
//   (2) 1 - H(1/x) <= 2 ||rho||_inf x F(x)^K
std::vector<BoundReport> check_lemma6(std::span<const cplx> samples,
                                      const PotentialDistribution& dist,
                                      std::int64_t branching, const ComplexEnergy& ze,
                                      std::span<const double> x_grid,
                                      bool negative_control = false);

struct Theorem1Options {
    std::int64_t n_fields = 50;
    QuadSpec quad;
    std::uint64_t seed = 1;
    int threads = 1;
    std::int64_t margin_shells = 2;  // require b/eta <= D - margin_shells
    double r2_min = 0.9;
};

// disorder-averaged lingering E[sum_{|x| < b/eta} K_hat(x)]: linear in b at
// each eta (R^2 above r2_min) with the fitted slope non-increasing as eta
// decreases (3 sigma trend test)
BoundReport check_theorem1(const PotentialDistribution& dist, std::int64_t branching,
                           std::int64_t depth, const EnergyWindow& window,
                           std::span<const double> eta_grid, std::span<const double> b_grid,
                           const Theorem1Options& opts = {}, bool negative_control = false);

// lower-tail exponent of F(x) = P(Im G <= x): fitted gamma >= 1 at 3 sigma
// over the smallest resolvable decade (desk-scale floor; the fitted value
// and its CI are always reported)
BoundReport check_F_power_law(std::span<const cplx> samples, bool negative_control = false);

}  // namespace bethe
