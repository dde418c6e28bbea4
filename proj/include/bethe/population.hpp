#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bethe/disorder.hpp"
#include "bethe/green.hpp"
#include "bethe/stats.hpp"

namespace bethe {

// Mean/variance drift between two consecutive evolution windows, in units
// of the combined standard error.  Standard population-dynamics practice:
// reported, never silently assumed.
struct PoolStationarity {
    double mean_drift_sigmas = 0.0;
    double var_drift_sigmas = 0.0;
    double mean_im_first = 0.0;
    double mean_im_second = 0.0;
    bool stationary = false;
};

// Population-dynamics pool: a large sample of forward Green functions Gamma
// representing the distributional fixed point of
//   Gamma' = 1/(V - zeta - sum_{i=1..K} Gamma_{j_i})
// on the infinite tree.  Every update is keyed by (seed, sweep, entry), so
// evolution is deterministic and chunking-independent.
class GreenPool {
public:
    GreenPool(std::int64_t branching, PotentialDistribution dist, ComplexEnergy ze,
              std::int64_t size, std::uint64_t seed, std::int64_t min_burnin = 100);

    // full-pool synchronous sweeps; aborts on any non-finite draw
    void evolve(std::int64_t sweeps, int threads = 1);

    // evolves two windows of window_sweeps each and compares them
    PoolStationarity stationarity_probe(std::int64_t window_sweeps, int threads = 1);

    std::span<const cplx> entries() const { return entries_; }
    std::int64_t size() const { return static_cast<std::int64_t>(entries_.size()); }
    std::int64_t branching() const { return branching_; }
    const ComplexEnergy& energy() const { return ze_; }
    const PotentialDistribution& dist() const { return dist_; }
    std::uint64_t seed() const { return seed_; }
    std::int64_t sweeps_done() const { return sweeps_done_; }
    std::int64_t min_burnin() const { return min_burnin_; }
    bool stationary() const { return sweeps_done_ >= min_burnin_; }

    // n draws of G(0,0;zeta) = 1/(V - zeta - sum_{i=1..K} Gamma_{j_i});
    // distinct epochs give disjoint counter ranges
    std::vector<cplx> root_samples(std::int64_t n, std::uint64_t epoch = 0) const;

    // test hook: overwrite all entries (convergence probes start off-fixed-point)
    void reset_entries(cplx value);

    // used by snapshot io
    void restore(std::vector<cplx> entries, std::int64_t sweeps_done);

private:
    std::int64_t branching_;
    PotentialDistribution dist_;
    ComplexEnergy ze_;
    std::uint64_t seed_;
    std::int64_t min_burnin_;
    std::int64_t sweeps_done_ = 0;
    std::vector<cplx> entries_;
};

inline void evolve_pool(GreenPool& pool, std::int64_t sweeps, int threads = 1) {
    pool.evolve(sweeps, threads);
}

// ---- estimators over frozen sample sets ----

// F_zeta(x) = P(Im G <= x)
MomentEstimate cdf_im(std::span<const cplx> samples, double x);
// H_zeta(y) = P(|G| <= y)
MomentEstimate cdf_abs(std::span<const cplx> samples, double y);

// E[(Im G)^(-p)]; flags the estimate when one sample carries > 10% of the mean
MomentEstimate inverse_moment(std::span<const cplx> samples, double p);

// power-law fit of the lower tail of F (smallest resolvable decade)
struct FPowerLawFit {
    double gamma = 0.0;
    double gamma_se = 0.0;
    double log_c = 0.0;
    std::vector<double> xs, fs, ses;
    bool ok = false;        // enough resolvable tail to fit
    std::string reason;
};
FPowerLawFit fit_f_power_law(std::span<const cplx> samples, int n_points = 5,
                             std::int64_t min_count = 10);

// inverse moment via the tail integral E[Y^-p] = p * int F(x) x^{-p-1} dx,
// with the unresolved part below the fitted decade modeled by the power law.
// Second member is false when the modeled tail diverges (gamma <= p).
std::pair<MomentEstimate, bool> inverse_moment_tail_route(std::span<const cplx> samples,
                                                          double p);

// E[|G(0,x_n;zeta)|^s] sampled along a fresh root-to-depth-n path; off-path
// subtrees are pool draws, on-path values are propagated exactly.
MomentEstimate fractional_path_moment(const GreenPool& pool, double s, std::int64_t n,
                                      std::int64_t n_samples, std::uint64_t epoch = 0);

struct FreeEnergyEstimate {
    double s = 0.0;
    ComplexEnergy ze;
    std::int64_t branching = 2;
    double slope = 0.0;      // phi-hat(s; zeta)
    double slope_se = 0.0;
    double intercept = 0.0;
    double intercept_se = 0.0;
    double cov_si = 0.0;
    double fit_residual = 0.0;  // chi^2/dof
    bool low_confidence = false;
    struct LengthPoint {
        std::int64_t n;
        double log_moment;
        double std_error;
    };
    std::vector<LengthPoint> per_length;
};

// weighted fit of log E[|G(0,x_n)|^s] against n
FreeEnergyEstimate free_energy(const GreenPool& pool, double s,
                               std::span<const std::int64_t> n_range,
                               std::int64_t n_samples, std::uint64_t epoch = 0,
                               double residual_threshold = 25.0);

// ---- phase criterion ----

enum class Phase { pp_like, ac_like, undetermined };

struct PhasePoint {
    double s;
    double psi;       // slope + s*log K
    double sigma;
};

struct PhaseClassification {
    Phase phase = Phase::undetermined;
    double psi_at_one = 0.0;   // linear extrapolation of psi to s = 1
    double sigma = 0.0;        // fit error + extrapolation spread, combined
    double margin = 0.0;       // psi_at_one / sigma
    std::vector<PhasePoint> points;
};

struct ClassifyOptions {
    std::int64_t pool_size = 100000;
    std::int64_t burnin = 100;
    std::vector<std::int64_t> n_range = {5, 10, 15, 20};
    std::int64_t n_samples = 100000;
    std::uint64_t seed = 1;
    int threads = 1;
};

// Path free energy measured against the branching entropy: psi(s) =
// phi-hat(s; E + i eta) + s log K, evaluated on the grid {0.7, 0.8, 0.9,
// s_top} and extrapolated linearly to s = 1 (moments at s >= 1 may diverge
// in the pp regime, so s = 1 is approached from below).  ac-like when the
// extrapolated value exceeds 0 with margin >= 2, pp-like when below with
// margin >= 2, undetermined otherwise.
PhaseClassification phase_classify(const PotentialDistribution& dist, std::int64_t branching,
                                   double E, double eta_probe = 1e-3, double s_top = 0.95,
                                   const ClassifyOptions& opts = {});

}  // namespace bethe
