#include <doctest.h>

#include <cmath>
#include <complex>

#include "bethe/errors.hpp"
#include "bethe/green.hpp"

using namespace bethe;

namespace {

double max_rel_diff(const GreenColumn& a, const GreenColumn& b) {
    double m = 0.0;
    for (std::size_t x = 0; x < a.g0x.size(); ++x)
        m = std::max(m, std::abs(a.g0x[x] - b.g0x[x]) / std::abs(b.g0x[x]));
    return m;
}

PotentialField zero_field(const TreeGeometry& geom) {
    return sample_field(PotentialDistribution::uniform(0.0), geom, 0);
}

}  // namespace

TEST_CASE("free forward Green function: positive-imaginary quadratic root") {
    // K Gamma^2 + zeta Gamma + 1 = 0 at zeta = 2i, K = 2 has the Herglotz
    // root i (sqrt(3) - 1)/2
    const cplx g = free_green(2, cplx(0.0, 2.0));
    CHECK(g.real() == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(g.imag() == doctest::Approx((std::sqrt(3.0) - 1.0) / 2.0).epsilon(1e-14));
    // residual of the quadratic
    const cplx res = 2.0 * g * g + cplx(0.0, 2.0) * g + 1.0;
    CHECK(std::abs(res) < 1e-14);
    // generic zeta: root property and Herglotz sign
    for (const cplx zeta : {cplx(0.3, 0.1), cplx(-1.0, 1e-3), cplx(2.5, 0.5)}) {
        for (std::int64_t K : {2, 3, 5}) {
            const cplx gg = free_green(K, zeta);
            CHECK(gg.imag() > 0.0);
            CHECK(std::abs(static_cast<double>(K) * gg * gg + zeta * gg + 1.0) < 1e-12);
        }
    }
}

TEST_CASE("deep interior of a zero-potential tree reaches the fixed point") {
    const TreeGeometry geom(2, 24);
    const ComplexEnergy ze(0.0, 2.0);
    const ForwardGreenField fwd = forward_sweep(zero_field(geom), geom, ze);
    CHECK(std::abs(fwd.gamma[0] - free_green(2, ze.zeta())) < 1e-6);
    CHECK(std::abs(fwd.gamma[0].imag() - 0.36602540378443865) < 1e-6);
}

TEST_CASE("single vertex resolvent") {
    const TreeGeometry geom(2, 0);
    auto field = zero_field(geom);
    field.values[0] = 0.7;
    const ComplexEnergy ze(0.2, 0.4);
    const ForwardGreenField fwd = forward_sweep(field, geom, ze);
    CHECK(std::abs(fwd.gamma[0] - 1.0 / (cplx(0.7, 0.0) - ze.zeta())) < 1e-15);
    // D=0, V=0, zeta=i: g00 = -1/i = i
    auto f0 = zero_field(geom);
    const GreenColumn col = resolvent_column(f0, geom, ComplexEnergy(0.0, 1.0));
    CHECK(std::abs(col.g00 - cplx(0.0, 1.0)) < 1e-15);
    CHECK(col.g0x.size() == 1);
}

TEST_CASE("Herglotz property for every vertex and sampled field") {
    const TreeGeometry geom(3, 6);
    const auto dist = PotentialDistribution::uniform(2.0);
    for (std::uint64_t seed : {1, 2, 3}) {
        const PotentialField field = sample_field(dist, geom, seed);
        for (double eta : {0.5, 1e-3}) {
            const ForwardGreenField fwd = forward_sweep(field, geom, ComplexEnergy(0.3, eta));
            CHECK(min_imag(fwd.gamma) > 0.0);
        }
    }
}

TEST_CASE("dense oracle self-checks") {
    const TreeGeometry geom(2, 5);
    const PotentialField field = sample_field(PotentialDistribution::uniform(2.0), geom, 9);
    // Hermitian symmetry: the (H - conj(zeta))^{-1} column is the conjugate
    const ComplexEnergy ze(0.4, 0.2);
    const GreenColumn plus = dense_oracle(field, geom, ze);
    // conj(zeta) has negative imaginary part, outside ComplexEnergy's domain;
    // check via the conjugated field equation instead: solve at zeta and
    // verify (H - zeta) u = delta_0 residuals column-wise
    const std::int64_t N = geom.vertex_count();
    for (std::int64_t x = 0; x < N; ++x) {
        cplx acc = (cplx(field.values[static_cast<std::size_t>(x)], 0.0) - ze.zeta()) *
                   plus.g0x[static_cast<std::size_t>(x)];
        if (x != 0) acc -= plus.g0x[static_cast<std::size_t>(geom.parent_of(x))];
        for (std::int64_t c : geom.children_of(x)) acc -= plus.g0x[static_cast<std::size_t>(c)];
        const cplx rhs = (x == 0) ? cplx(1.0, 0.0) : cplx(0.0, 0.0);
        CHECK(std::abs(acc - rhs) < 1e-12);
    }
    // oracle agrees with recursion on the zero-potential tree to 1e-12
    const TreeGeometry g5(2, 5);
    const auto f0 = zero_field(g5);
    const GreenColumn rec = resolvent_column(f0, g5, ComplexEnergy(0.0, 1.0));
    const GreenColumn ora = dense_oracle(f0, g5, ComplexEnergy(0.0, 1.0));
    CHECK(std::abs(rec.g00 - ora.g00) < 1e-12);
    // size guard
    CHECK_THROWS_AS(dense_oracle(field, TreeGeometry(2, 13), ComplexEnergy(0.0, 1.0)),
                    std::invalid_argument);
}

TEST_CASE("recursion equals dense solve over seeds, K, D, eta") {
    const auto dist = PotentialDistribution::uniform(2.0);
    for (std::int64_t K : {2, 3}) {
        for (std::int64_t D : {1, 4, 6}) {
            const TreeGeometry geom(K, D);
            for (std::uint64_t seed = 0; seed < 5; ++seed) {
                const PotentialField field = sample_field(dist, geom, seed);
                for (double eta : {1e-3, 1e-1, 1.0}) {
                    const ComplexEnergy ze(0.3, eta);
                    const GreenColumn rec = resolvent_column(field, geom, ze);
                    const GreenColumn ora = dense_oracle(field, geom, ze);
                    CHECK(max_rel_diff(rec, ora) < 1e-10);
                }
            }
        }
    }
}

TEST_CASE("l2 identity and the root recursion inequality hold exactly") {
    const TreeGeometry geom(2, 8);
    const auto dist = PotentialDistribution::uniform(2.0);
    for (std::uint64_t seed : {4, 5}) {
        const PotentialField field = sample_field(dist, geom, seed);
        for (double eta : {1e-3, 0.5}) {
            const ComplexEnergy ze(-0.7, eta);
            const ForwardGreenField fwd = forward_sweep(field, geom, ze);
            const GreenColumn col = resolvent_column(geom, fwd);
            double l2 = 0.0;
            for (const cplx& g : col.g0x) l2 += std::norm(g);
            const double expected = col.g00.imag() / eta;
            CHECK(std::abs(l2 - expected) / expected < 1e-8);

            // Im g00 >= |g00|^2 sum_children Im gamma (identity minus eta term)
            cplx child_sum(0.0, 0.0);
            for (std::int64_t c : geom.children_of(0))
                child_sum += fwd.gamma[static_cast<std::size_t>(c)];
            const double lhs = col.g00.imag();
            const double rhs = std::norm(col.g00) * child_sum.imag();
            CHECK(lhs >= rhs * (1.0 - 1e-12));
            // and the exact identity including the eta term
            const double exact = std::norm(col.g00) * (child_sum.imag() + eta);
            CHECK(lhs == doctest::Approx(exact).epsilon(1e-12));
        }
    }
}

TEST_CASE("pool-boundary sweep stays Herglotz and deterministic") {
    const TreeGeometry geom(2, 6);
    const PotentialField field = sample_field(PotentialDistribution::uniform(1.0), geom, 3);
    const ComplexEnergy ze(0.0, 1e-2);
    const std::vector<cplx> pool = {free_green(2, ze.zeta()), cplx(0.1, 0.5), cplx(-0.2, 0.9)};
    const ForwardGreenField a = forward_sweep(field, geom, ze, pool, 77);
    const ForwardGreenField b = forward_sweep(field, geom, ze, pool, 77);
    CHECK(a.gamma == b.gamma);
    CHECK(min_imag(a.gamma) > 0.0);
    const ForwardGreenField c = forward_sweep(field, geom, ze, pool, 78);
    CHECK(a.gamma != c.gamma);
}
