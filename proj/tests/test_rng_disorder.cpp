#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "bethe/disorder.hpp"
#include "bethe/rng.hpp"
#include "bethe/tree.hpp"

using namespace bethe;

namespace {

// quadrature oracle for E|V|^r over a density given as a callable
double moment_by_quadrature(double r, double lo, double hi, auto rho) {
    const int n = 200000;
    const double h = (hi - lo) / n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = lo + (i + 0.5) * h;
        acc += std::pow(std::abs(v), r) * rho(v);
    }
    return acc * h;
}

double ks_distance(std::vector<double> xs, auto cdf) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double F = cdf(xs[i]);
        d = std::max(d, std::abs(F - static_cast<double>(i) / n));
        d = std::max(d, std::abs(F - static_cast<double>(i + 1) / n));
    }
    return d;
}

}  // namespace

TEST_CASE("closed-form density bounds and moments") {
    CHECK(PotentialDistribution::uniform(1.0).density_sup() == doctest::Approx(1.0));
    CHECK(PotentialDistribution::gaussian(1.0).density_sup() ==
          doctest::Approx(0.3989422804014327).epsilon(1e-12));
    CHECK(PotentialDistribution::uniform(2.0).abs_moment(2.0) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(PotentialDistribution::uniform(2.0).abs_moment(0.0) == 1.0);

    // oracle cross-check: quadrature over the analytic densities
    const double q_uniform =
        moment_by_quadrature(3.0, -1.0, 1.0, [](double) { return 0.5; });
    CHECK(PotentialDistribution::uniform(2.0).abs_moment(3.0) ==
          doctest::Approx(q_uniform).epsilon(1e-6));
    const double q_gauss = moment_by_quadrature(4.0, -12.0, 12.0, [](double v) {
        return std::exp(-0.5 * v * v) / std::sqrt(2.0 * M_PI);
    });
    CHECK(PotentialDistribution::gaussian(1.0).abs_moment(4.0) ==
          doctest::Approx(q_gauss).epsilon(1e-6));
    // r > 12 moment required by the theorems stays finite for the built-ins
    CHECK(std::isfinite(PotentialDistribution::uniform(1.0).abs_moment(13.0)));
    CHECK(std::isfinite(PotentialDistribution::gaussian(1.0).abs_moment(13.0)));
}

TEST_CASE("tail probabilities") {
    const auto u = PotentialDistribution::uniform(2.0);
    CHECK(u.tail_prob(0.25) == doctest::Approx(0.75));
    CHECK(u.tail_prob(1.5) == 0.0);
    CHECK(u.tail_prob(-1.0) == 1.0);
    const auto g = PotentialDistribution::gaussian(2.0);
    CHECK(g.tail_prob(2.0) == doctest::Approx(std::erfc(1.0 / std::sqrt(2.0))).epsilon(1e-12));
}

TEST_CASE("invalid parameters rejected") {
    CHECK_THROWS_AS(PotentialDistribution::uniform(-1.0), std::invalid_argument);
    CHECK_THROWS_AS(PotentialDistribution::gaussian(0.0), std::invalid_argument);
    CHECK_THROWS_AS(PotentialDistribution::table({{0.0, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(PotentialDistribution::table({{0.0, 1.0}, {0.0, 1.0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(PotentialDistribution::table({{0.0, -1.0}, {1.0, 1.0}}),
                    std::invalid_argument);
}

TEST_CASE("width-0 uniform is the degenerate zero potential") {
    const auto z = PotentialDistribution::uniform(0.0);
    CHECK(z.sample(7, rng::Stream::field_sample, 0) == 0.0);
    CHECK(z.abs_moment(2.0) == 0.0);
    CHECK(z.tail_prob(0.1) == 0.0);
    CHECK(std::isinf(z.density_sup()));
}

TEST_CASE("field sampling: support, determinism, reproducibility") {
    const TreeGeometry geom(2, 10);
    const auto dist = PotentialDistribution::uniform(1.0);
    const PotentialField a = sample_field(dist, geom, 42);
    const PotentialField b = sample_field(dist, geom, 42);
    CHECK(a.values == b.values);  // bit-exact
    const PotentialField c = sample_field(dist, geom, 43);
    CHECK(a.values != c.values);
    for (double v : a.values) {
        CHECK(v >= -0.5);
        CHECK(v <= 0.5);
    }
}

TEST_CASE("uniform sample mean and variance at 1e6 draws") {
    const auto dist = PotentialDistribution::uniform(2.0);
    const std::int64_t n = 1000000;
    double sum = 0.0, sq = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        const double v = dist.sample(11, rng::Stream::field_sample, static_cast<std::uint64_t>(i));
        sum += v;
        sq += v * v;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    const double sigma_mean = std::sqrt(1.0 / 3.0 / static_cast<double>(n));
    CHECK(std::abs(mean) < 4.0 * sigma_mean);
    CHECK(std::abs(var - 1.0 / 3.0) < 0.05 * (1.0 / 3.0));
}

TEST_CASE("empirical CDF matches analytic CDF (KS < 0.002) and streams decorrelate") {
    const std::int64_t n = 1000000;
    for (const auto& dist :
         {PotentialDistribution::uniform(2.0), PotentialDistribution::gaussian(1.5)}) {
        std::vector<double> xs(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i)
            xs[static_cast<std::size_t>(i)] =
                dist.sample(3, rng::Stream::field_sample, static_cast<std::uint64_t>(i));
        CHECK(ks_distance(xs, [&](double v) { return dist.cdf(v); }) < 0.002);

        // lag correlations of the shell-major stream
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double x : xs) var += (x - mean) * (x - mean);
        var /= static_cast<double>(n);
        for (std::int64_t lag : {1, 2, 7, 64}) {
            double acc = 0.0;
            for (std::int64_t i = 0; i + lag < n; ++i)
                acc += (xs[static_cast<std::size_t>(i)] - mean) *
                       (xs[static_cast<std::size_t>(i + lag)] - mean);
            const double corr = acc / (static_cast<double>(n - lag) * var);
            CHECK(std::abs(corr) < 4.0 / std::sqrt(static_cast<double>(n)));
        }
    }
}

TEST_CASE("table distribution reproduces a uniform density") {
    // piecewise-linear table that is exactly uniform on [-1, 1]
    const auto t = PotentialDistribution::table({{-1.0, 0.5}, {0.0, 0.5}, {1.0, 0.5}});
    CHECK(t.density_sup() == doctest::Approx(0.5));
    CHECK(t.abs_moment(2.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-3));
    CHECK(t.tail_prob(0.5) == doctest::Approx(0.5).epsilon(1e-9));
    std::vector<double> xs(200000);
    for (std::size_t i = 0; i < xs.size(); ++i)
        xs[i] = t.sample(5, rng::Stream::field_sample, i);
    CHECK(ks_distance(xs, [&](double v) { return t.cdf(v); }) < 0.005);
}

TEST_CASE("spectrum interval") {
    const auto [lo, hi] = spectrum_interval(2, PotentialDistribution::uniform(2.0));
    CHECK(lo == doctest::Approx(-2.0 * std::sqrt(2.0) - 1.0));
    CHECK(hi == doctest::Approx(2.0 * std::sqrt(2.0) + 1.0));
}
