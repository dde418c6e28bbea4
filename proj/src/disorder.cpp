#include "bethe/disorder.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace bethe {

namespace {
constexpr double kSqrt2Pi = 2.5066282746310005024;

// integral of |v|^r * (a + b*(v - v0)) over [v0, v1] by 32-point midpoint
// refinement; segments are split at 0 by the caller so |v|^r is smooth here
double segment_abs_moment(double r, double v0, double v1, double rho0, double rho1) {
    const int n = 64;
    const double h = (v1 - v0) / n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double vm = v0 + (i + 0.5) * h;
        const double t = (vm - v0) / (v1 - v0);
        const double rho = rho0 + (rho1 - rho0) * t;
        acc += std::pow(std::abs(vm), r) * rho;
    }
    return acc * h;
}
}  // namespace

PotentialDistribution PotentialDistribution::uniform(double width) {
    if (!(width >= 0.0) || !std::isfinite(width))
        throw std::invalid_argument("uniform distribution: width must be >= 0");
    PotentialDistribution d;
    d.kind_ = DistKind::uniform;
    d.width_ = width;
    return d;
}

PotentialDistribution PotentialDistribution::gaussian(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw std::invalid_argument("gaussian distribution: sigma must be > 0");
    PotentialDistribution d;
    d.kind_ = DistKind::gaussian;
    d.sigma_ = sigma;
    return d;
}

PotentialDistribution PotentialDistribution::table(std::vector<std::pair<double, double>> points) {
    if (points.size() < 2) throw std::invalid_argument("table distribution: need at least 2 points");
    PotentialDistribution d;
    d.kind_ = DistKind::table;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& [v, rho] = points[i];
        if (!std::isfinite(v) || !std::isfinite(rho) || rho < 0.0)
            throw std::invalid_argument("table distribution: non-finite or negative entry");
        if (i > 0 && v <= points[i - 1].first)
            throw std::invalid_argument("table distribution: v grid must be strictly increasing");
        d.tv_.push_back(v);
        d.trho_.push_back(rho);
    }
    // trapezoid mass, then normalize to 1
    double mass = 0.0;
    for (std::size_t i = 1; i < d.tv_.size(); ++i)
        mass += 0.5 * (d.trho_[i] + d.trho_[i - 1]) * (d.tv_[i] - d.tv_[i - 1]);
    if (!(mass > 0.0)) throw std::invalid_argument("table distribution: zero total mass");
    for (auto& r : d.trho_) r /= mass;
    d.tcdf_.assign(d.tv_.size(), 0.0);
    for (std::size_t i = 1; i < d.tv_.size(); ++i)
        d.tcdf_[i] = d.tcdf_[i - 1] + 0.5 * (d.trho_[i] + d.trho_[i - 1]) * (d.tv_[i] - d.tv_[i - 1]);
    d.tcdf_.back() = 1.0;
    return d;
}

double PotentialDistribution::density_sup() const {
    switch (kind_) {
        case DistKind::uniform:
            return width_ > 0.0 ? 1.0 / width_ : std::numeric_limits<double>::infinity();
        case DistKind::gaussian:
            return 1.0 / (sigma_ * kSqrt2Pi);
        case DistKind::table:
            return *std::max_element(trho_.begin(), trho_.end());
    }
    return 0.0;
}

double PotentialDistribution::abs_moment(double r) const {
    if (r < 0.0) throw std::invalid_argument("abs_moment: r must be >= 0");
    if (r == 0.0) return 1.0;
    switch (kind_) {
        case DistKind::uniform:
            return width_ > 0.0 ? std::pow(0.5 * width_, r) / (r + 1.0) : 0.0;
        case DistKind::gaussian:
            // E|V|^r = sigma^r 2^{r/2} Gamma((r+1)/2) / sqrt(pi)
            return std::pow(sigma_, r) * std::pow(2.0, 0.5 * r) *
                   std::tgamma(0.5 * (r + 1.0)) / std::sqrt(M_PI);
        case DistKind::table: {
            double acc = 0.0;
            for (std::size_t i = 1; i < tv_.size(); ++i) {
                double a = tv_[i - 1], b = tv_[i];
                if (a < 0.0 && b > 0.0) {
                    const double t = (0.0 - a) / (b - a);
                    const double rho_mid = trho_[i - 1] + (trho_[i] - trho_[i - 1]) * t;
                    acc += segment_abs_moment(r, a, 0.0, trho_[i - 1], rho_mid);
                    acc += segment_abs_moment(r, 0.0, b, rho_mid, trho_[i]);
                } else {
                    acc += segment_abs_moment(r, a, b, trho_[i - 1], trho_[i]);
                }
            }
            if (!std::isfinite(acc)) return std::numeric_limits<double>::infinity();
            return acc;
        }
    }
    return 0.0;
}

double PotentialDistribution::cdf(double v) const {
    switch (kind_) {
        case DistKind::uniform: {
            if (width_ == 0.0) return v < 0.0 ? 0.0 : 1.0;
            const double u = (v + 0.5 * width_) / width_;
            return std::clamp(u, 0.0, 1.0);
        }
        case DistKind::gaussian:
            return 0.5 * std::erfc(-v / (sigma_ * std::sqrt(2.0)));
        case DistKind::table: {
            if (v <= tv_.front()) return 0.0;
            if (v >= tv_.back()) return 1.0;
            const auto it = std::upper_bound(tv_.begin(), tv_.end(), v);
            const std::size_t i = static_cast<std::size_t>(it - tv_.begin());
            const double h = tv_[i] - tv_[i - 1];
            const double t = (v - tv_[i - 1]) / h;
            return tcdf_[i - 1] + h * (trho_[i - 1] * t + 0.5 * (trho_[i] - trho_[i - 1]) * t * t);
        }
    }
    return 0.0;
}

double PotentialDistribution::tail_prob(double w) const {
    if (w <= 0.0) return 1.0;
    switch (kind_) {
        case DistKind::uniform:
            if (width_ == 0.0) return 0.0;
            return w >= 0.5 * width_ ? 0.0 : 1.0 - 2.0 * w / width_;
        case DistKind::gaussian:
            return std::erfc(w / (sigma_ * std::sqrt(2.0)));
        case DistKind::table:
            return cdf(-w) + (1.0 - cdf(w));
    }
    return 0.0;
}

std::pair<double, double> PotentialDistribution::support() const {
    switch (kind_) {
        case DistKind::uniform:
            return {-0.5 * width_, 0.5 * width_};
        case DistKind::gaussian:
            return {-std::numeric_limits<double>::infinity(),
                    std::numeric_limits<double>::infinity()};
        case DistKind::table:
            return {tv_.front(), tv_.back()};
    }
    return {0.0, 0.0};
}

double PotentialDistribution::sample(std::uint64_t seed, rng::Stream stream,
                                     std::uint64_t c0, std::uint64_t c1) const {
    switch (kind_) {
        case DistKind::uniform:
            return (rng::u01(seed, stream, c0, c1, 0) - 0.5) * width_;
        case DistKind::gaussian:
            return sigma_ * rng::normal(seed, stream, c0, c1, 0);
        case DistKind::table: {
            const double u = rng::u01(seed, stream, c0, c1, 0);
            const auto it = std::upper_bound(tcdf_.begin(), tcdf_.end(), u);
            std::size_t i = static_cast<std::size_t>(it - tcdf_.begin());
            i = std::min(std::max<std::size_t>(i, 1), tcdf_.size() - 1);
            const double h = tv_[i] - tv_[i - 1];
            const double a = trho_[i - 1];
            const double b = trho_[i] - trho_[i - 1];
            const double target = (u - tcdf_[i - 1]) / h;
            // solve a*t + b*t^2/2 = target on [0,1]
            double t;
            if (std::abs(b) < 1e-14 * std::max(a, 1e-300)) {
                t = a > 0.0 ? target / a : 0.5;
            } else {
                const double disc = std::max(a * a + 2.0 * b * target, 0.0);
                t = (-a + std::sqrt(disc)) / b;
            }
            t = std::clamp(t, 0.0, 1.0);
            return tv_[i - 1] + t * h;
        }
    }
    return 0.0;
}

std::string PotentialDistribution::describe() const {
    char buf[64];
    switch (kind_) {
        case DistKind::uniform:
            std::snprintf(buf, sizeof buf, "uniform(W=%.17g)", width_);
            return buf;
        case DistKind::gaussian:
            std::snprintf(buf, sizeof buf, "gaussian(sigma=%.17g)", sigma_);
            return buf;
        case DistKind::table:
            std::snprintf(buf, sizeof buf, "table(%zu points)", tv_.size());
            return buf;
    }
    return "?";
}

std::vector<std::pair<double, double>> PotentialDistribution::table_points() const {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < tv_.size(); ++i) pts.emplace_back(tv_[i], trho_[i]);
    return pts;
}

PotentialField sample_field(const PotentialDistribution& dist,
                            const TreeGeometry& geometry, std::uint64_t seed) {
    PotentialField field;
    field.seed = seed;
    field.dist = dist;
    const std::int64_t n = geometry.vertex_count();
    field.values.resize(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
        field.values[static_cast<std::size_t>(i)] =
            dist.sample(seed, rng::Stream::field_sample, static_cast<std::uint64_t>(i));
    return field;
}

std::pair<double, double> spectrum_interval(std::int64_t branching,
                                            const PotentialDistribution& dist) {
    const double edge = 2.0 * std::sqrt(static_cast<double>(branching));
    const auto [lo, hi] = dist.support();
    return {-edge + lo, edge + hi};
}

}  // namespace bethe
