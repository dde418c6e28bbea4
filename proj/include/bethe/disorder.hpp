#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "bethe/rng.hpp"
#include "bethe/tree.hpp"

namespace bethe {

enum class DistKind { uniform, gaussian, table };

// Single-site distribution of the i.i.d. random potential.  Built-in kinds
// are uniform(width W) on [-W/2, W/2] and centered gaussian(sigma); a
// bounded user density can be supplied as a piecewise-linear table.
// Width 0 is the degenerate V = 0 case used by the exact free-Laplacian
// anchors (its density bound is reported as infinite).
class PotentialDistribution {
public:
    static PotentialDistribution uniform(double width);
    static PotentialDistribution gaussian(double sigma);
    // points: (v, rho(v)) with strictly increasing v; rho >= 0; the table is
    // normalized to unit mass internally
    static PotentialDistribution table(std::vector<std::pair<double, double>> points);

    DistKind kind() const { return kind_; }
    double width() const { return width_; }
    double sigma() const { return sigma_; }

    // sup-norm of the density; +inf for the degenerate width-0 uniform
    double density_sup() const;

    // E|V|^r, r >= 0 (closed form for built-ins, quadrature for tables)
    double abs_moment(double r) const;

    // P(|V| >= w)
    double tail_prob(double w) const;

    double cdf(double v) const;

    // support interval; gaussian is (-inf, inf)
    std::pair<double, double> support() const;

    // one draw, keyed by (seed, stream, c0, c1); pure function of its inputs
    double sample(std::uint64_t seed, rng::Stream stream, std::uint64_t c0,
                  std::uint64_t c1 = 0) const;

    std::string describe() const;

    // normalized table knots (empty for built-in kinds)
    std::vector<std::pair<double, double>> table_points() const;

private:
    PotentialDistribution() = default;

    DistKind kind_ = DistKind::uniform;
    double width_ = 1.0;
    double sigma_ = 1.0;
    // table knots and normalized densities, plus cumulative mass at knots
    std::vector<double> tv_, trho_, tcdf_;
};

// Realized random potential on a truncated tree, one value per vertex in
// shell-major order.  Bit-exact reproducible from (seed, dist, geometry).
struct PotentialField {
    std::vector<double> values;
    std::uint64_t seed = 0;
    PotentialDistribution dist = PotentialDistribution::uniform(1.0);

    double max_abs() const {
        double m = 0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }
};

PotentialField sample_field(const PotentialDistribution& dist,
                            const TreeGeometry& geometry, std::uint64_t seed);

// Almost-sure spectrum of H = -adjacency + V on the infinite tree:
// [-2 sqrt(K), 2 sqrt(K)] + supp(V)
std::pair<double, double> spectrum_interval(std::int64_t branching,
                                            const PotentialDistribution& dist);

}  // namespace bethe
