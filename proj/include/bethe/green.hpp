#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "bethe/disorder.hpp"
#include "bethe/tree.hpp"

namespace bethe {

using cplx = std::complex<double>;

// spectral parameter zeta = E + i eta, eta > 0 strictly
struct ComplexEnergy {
    double E = 0.0;
    double eta = 1e-3;

    ComplexEnergy() = default;
    ComplexEnergy(double E_, double eta_) : E(E_), eta(eta_) {
        if (!(eta > 0.0)) throw std::invalid_argument("ComplexEnergy: eta must be > 0");
    }
    cplx zeta() const { return {E, eta}; }
};

// |den| >= Im zeta > 0 for every denominator in the sweeps, so the plain
// conjugate formula is safe and much faster than std::complex division
inline cplx reciprocal(cplx d) {
    const double s = d.real() * d.real() + d.imag() * d.imag();
    return {d.real() / s, -d.imag() / s};
}

enum class Boundary { zero, pool };

// gamma[x] = Green function at x of the subtree forward of x's parent;
// Im gamma > 0 everywhere (Herglotz)
struct ForwardGreenField {
    std::vector<cplx> gamma;
    Boundary boundary = Boundary::zero;
};

// resolvent column through the root: g0x[x] = G(0,x;zeta), g00 = G(0,0;zeta)
struct GreenColumn {
    std::vector<cplx> g0x;
    cplx g00;
};

// One upward pass, deepest shell first:
//   leaves:    gamma = 1/(V - zeta - [boundary terms])
//   interior:  gamma[x] = 1/(V(x) - zeta - sum_children gamma)
// Zero boundary is the exact truncated (Dirichlet) operator.  The pool
// overload draws K independent entries per leaf to approximate the infinite
// tree; draws are keyed by (draw_seed, leaf id, slot).
ForwardGreenField forward_sweep(const PotentialField& field,
                                const TreeGeometry& geometry,
                                const ComplexEnergy& ze);
ForwardGreenField forward_sweep(const PotentialField& field,
                                const TreeGeometry& geometry,
                                const ComplexEnergy& ze,
                                std::span<const cplx> pool_entries,
                                std::uint64_t draw_seed);

// buffer-reusing variants for hot loops (quadrature nodes, eta scans)
void forward_sweep_into(const PotentialField& field, const TreeGeometry& geometry,
                        const ComplexEnergy& ze, ForwardGreenField& out);
void resolvent_column_into(const TreeGeometry& geometry, const ForwardGreenField& forward,
                           GreenColumn& out);

// Downward pass over a completed sweep: g00 = gamma[root] and
// g0x[x] = g0x[parent(x)] * gamma[x]; O(N) per zeta.
GreenColumn resolvent_column(const TreeGeometry& geometry,
                             const ForwardGreenField& forward);
GreenColumn resolvent_column(const PotentialField& field,
                             const TreeGeometry& geometry,
                             const ComplexEnergy& ze);

// Test/validation oracle: explicit dense (H - zeta) u = delta_0 solve by
// partial-pivot LU.  Guarded to vertex_count <= 5000.
GreenColumn dense_oracle(const PotentialField& field,
                         const TreeGeometry& geometry,
                         const ComplexEnergy& ze);

// Positive-imaginary root of K*G^2 + zeta*G + 1 = 0: the forward Green
// function of the zero-potential infinite tree.  On the rooted tree (root
// degree K) this also equals G(0,0;zeta) of the free operator.
cplx free_green(std::int64_t branching, cplx zeta);

double min_imag(std::span<const cplx> values);

}  // namespace bethe
