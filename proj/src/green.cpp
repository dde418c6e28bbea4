#include "bethe/green.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "bethe/errors.hpp"
#include "bethe/rng.hpp"

namespace bethe {

namespace {

void check_finite(cplx g, std::int64_t vertex, const char* where) {
    if (!std::isfinite(g.real()) || !std::isfinite(g.imag()))
        throw NumericError(std::string(where) + ": non-finite Green value at vertex " +
                           std::to_string(vertex));
}

template <typename LeafTerm>
void sweep_impl(const PotentialField& field, const TreeGeometry& geometry,
                const ComplexEnergy& ze, Boundary boundary, LeafTerm leaf_term,
                ForwardGreenField& out) {
    const std::int64_t K = geometry.branching();
    const std::int64_t D = geometry.depth();
    const cplx zeta = ze.zeta();

    out.boundary = boundary;
    out.gamma.resize(field.values.size());
    cplx* gamma = out.gamma.data();
    const double* V = field.values.data();

    // deepest shell first; children of shell-n vertices are contiguous in
    // shell n+1, so each pass is a sequential scan
    {
        const std::int64_t lo = geometry.shell_start(D);
        const std::int64_t hi = geometry.shell_start(D + 1);
        for (std::int64_t x = lo; x < hi; ++x) {
            const cplx den = cplx(V[x], 0.0) - zeta - leaf_term(x);
            gamma[x] = reciprocal(den);
        }
        check_finite(gamma[hi - 1], hi - 1, "forward_sweep");
    }
    for (std::int64_t n = D - 1; n >= 0; --n) {
        const std::int64_t lo = geometry.shell_start(n);
        const std::int64_t hi = geometry.shell_start(n + 1);
        std::int64_t child = hi;  // first vertex of shell n+1
        for (std::int64_t x = lo; x < hi; ++x) {
            cplx acc = cplx(V[x], 0.0) - zeta;
            for (std::int64_t i = 0; i < K; ++i) acc -= gamma[child + i];
            child += K;
            gamma[x] = reciprocal(acc);
        }
        check_finite(gamma[lo], lo, "forward_sweep");
    }
}

}  // namespace

ForwardGreenField forward_sweep(const PotentialField& field, const TreeGeometry& geometry,
                                const ComplexEnergy& ze) {
    ForwardGreenField out;
    sweep_impl(field, geometry, ze, Boundary::zero,
               [](std::int64_t) { return cplx(0.0, 0.0); }, out);
    return out;
}

void forward_sweep_into(const PotentialField& field, const TreeGeometry& geometry,
                        const ComplexEnergy& ze, ForwardGreenField& out) {
    sweep_impl(field, geometry, ze, Boundary::zero,
               [](std::int64_t) { return cplx(0.0, 0.0); }, out);
}

void resolvent_column_into(const TreeGeometry& geometry, const ForwardGreenField& forward,
                           GreenColumn& out) {
    const std::int64_t K = geometry.branching();
    const std::int64_t D = geometry.depth();
    out.g0x.resize(forward.gamma.size());
    out.g0x[0] = forward.gamma[0];
    out.g00 = forward.gamma[0];
    for (std::int64_t n = 0; n < D; ++n) {
        const std::int64_t lo = geometry.shell_start(n);
        const std::int64_t hi = geometry.shell_start(n + 1);
        std::int64_t child = hi;
        for (std::int64_t x = lo; x < hi; ++x) {
            const cplx gx = out.g0x[static_cast<std::size_t>(x)];
            for (std::int64_t i = 0; i < K; ++i, ++child)
                out.g0x[static_cast<std::size_t>(child)] =
                    gx * forward.gamma[static_cast<std::size_t>(child)];
        }
    }
}

ForwardGreenField forward_sweep(const PotentialField& field, const TreeGeometry& geometry,
                                const ComplexEnergy& ze, std::span<const cplx> pool_entries,
                                std::uint64_t draw_seed) {
    if (pool_entries.empty())
        throw std::invalid_argument("forward_sweep: pool boundary requires a non-empty pool");
    const std::int64_t K = geometry.branching();
    const std::uint64_t n = pool_entries.size();
    auto leaf_term = [&](std::int64_t x) {
        cplx acc(0.0, 0.0);
        for (std::int64_t i = 0; i < K; ++i) {
            const std::uint64_t h = rng::u64(draw_seed, rng::Stream::pool_boundary,
                                             static_cast<std::uint64_t>(x),
                                             static_cast<std::uint64_t>(i));
            acc += pool_entries[rng::index(h, n)];
        }
        return acc;
    };
    ForwardGreenField out;
    sweep_impl(field, geometry, ze, Boundary::pool, leaf_term, out);
    return out;
}

GreenColumn resolvent_column(const TreeGeometry& geometry, const ForwardGreenField& forward) {
    GreenColumn col;
    resolvent_column_into(geometry, forward, col);
    return col;
}

GreenColumn resolvent_column(const PotentialField& field, const TreeGeometry& geometry,
                             const ComplexEnergy& ze) {
    return resolvent_column(geometry, forward_sweep(field, geometry, ze));
}

GreenColumn dense_oracle(const PotentialField& field, const TreeGeometry& geometry,
                         const ComplexEnergy& ze) {
    const std::int64_t N = geometry.vertex_count();
    if (N > 5000) throw std::invalid_argument("dense_oracle: vertex_count > 5000");
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(N, N);
    for (std::int64_t x = 0; x < N; ++x)
        A(x, x) = cplx(field.values[static_cast<std::size_t>(x)], 0.0) - ze.zeta();
    for (std::int64_t x = 1; x < N; ++x) {
        const std::int64_t p = geometry.parent_of(x);
        A(x, p) = cplx(-1.0, 0.0);
        A(p, x) = cplx(-1.0, 0.0);
    }
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(N);
    rhs(0) = cplx(1.0, 0.0);
    Eigen::VectorXcd u = A.partialPivLu().solve(rhs);
    GreenColumn col;
    col.g0x.assign(u.data(), u.data() + N);
    col.g00 = col.g0x[0];
    return col;
}

cplx free_green(std::int64_t branching, cplx zeta) {
    const double K = static_cast<double>(branching);
    const cplx disc = std::sqrt(zeta * zeta - 4.0 * K);
    const cplx r1 = (-zeta + disc) / (2.0 * K);
    const cplx r2 = (-zeta - disc) / (2.0 * K);
    return r1.imag() > r2.imag() ? r1 : r2;
}

double min_imag(std::span<const cplx> values) {
    double m = std::numeric_limits<double>::infinity();
    for (const cplx& v : values) m = std::min(m, v.imag());
    return m;
}

}  // namespace bethe
