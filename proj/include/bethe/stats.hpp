#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace bethe {

// Monte-Carlo estimate with its standard error (sample std / sqrt(n)).
// max_share is the largest single-sample contribution to the mean, used as
// a heavy-tail diagnostic by the inverse-moment estimators.
struct MomentEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::int64_t n_samples = 0;
    double max_share = 0.0;
    bool heavy_tail_flagged = false;
};

inline MomentEstimate mean_stderr(std::span<const double> xs) {
    const std::int64_t n = static_cast<std::int64_t>(xs.size());
    if (n < 2) throw std::invalid_argument("mean_stderr: need n >= 2 samples");
    double sum = 0.0, max_term = 0.0;
    for (double x : xs) {
        sum += x;
        max_term = std::max(max_term, std::abs(x));
    }
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    MomentEstimate e;
    e.mean = mean;
    e.std_error = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
    e.n_samples = n;
    e.max_share = sum != 0.0 ? max_term / std::abs(sum) : 0.0;
    return e;
}

// least-squares line y = intercept + slope * x
struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double intercept_se = 0.0;
    double cov_si = 0.0;      // cov(slope, intercept)
    double chi2_dof = 0.0;    // weighted: chi^2/dof; unweighted: residual variance
    double r2 = 1.0;
    std::int64_t n = 0;
};

// weights 1/sigma_i^2; errors from the weighted normal equations, scaled by
// sqrt(chi2/dof) when the fit is worse than the stated sigmas
inline LinearFit fit_linear_weighted(std::span<const double> xs, std::span<const double> ys,
                                     std::span<const double> sigmas) {
    const std::size_t n = xs.size();
    if (n < 2 || ys.size() != n || sigmas.size() != n)
        throw std::invalid_argument("fit_linear_weighted: need matching arrays, n >= 2");
    double S = 0, Sx = 0, Sy = 0, Sxx = 0, Sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double s = sigmas[i] > 0.0 ? sigmas[i] : 1e-300;
        const double w = 1.0 / (s * s);
        S += w;
        Sx += w * xs[i];
        Sy += w * ys[i];
        Sxx += w * xs[i] * xs[i];
        Sxy += w * xs[i] * ys[i];
    }
    const double delta = S * Sxx - Sx * Sx;
    LinearFit f;
    f.n = static_cast<std::int64_t>(n);
    f.slope = (S * Sxy - Sx * Sy) / delta;
    f.intercept = (Sxx * Sy - Sx * Sxy) / delta;
    double chi2 = 0.0, tss = 0.0;
    const double ybar = Sy / S;
    for (std::size_t i = 0; i < n; ++i) {
        const double s = sigmas[i] > 0.0 ? sigmas[i] : 1e-300;
        const double r = (ys[i] - f.intercept - f.slope * xs[i]) / s;
        chi2 += r * r;
        const double t = (ys[i] - ybar) / s;
        tss += t * t;
    }
    f.chi2_dof = n > 2 ? chi2 / static_cast<double>(n - 2) : 0.0;
    f.r2 = tss > 0.0 ? 1.0 - chi2 / tss : 1.0;
    const double scale = std::max(1.0, f.chi2_dof);  // inflate errors on bad fits
    f.slope_se = std::sqrt(S / delta * scale);
    f.intercept_se = std::sqrt(Sxx / delta * scale);
    f.cov_si = -Sx / delta * scale;
    return f;
}

inline LinearFit fit_linear(std::span<const double> xs, std::span<const double> ys) {
    std::vector<double> unit(xs.size(), 1.0);
    LinearFit f = fit_linear_weighted(xs, ys, unit);
    // with unknown sigmas, estimate them from the residual scatter
    if (xs.size() > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double r = ys[i] - f.intercept - f.slope * xs[i];
            rss += r * r;
        }
        const double s2 = rss / static_cast<double>(xs.size() - 2);
        double S = static_cast<double>(xs.size()), Sx = 0, Sxx = 0;
        for (double x : xs) {
            Sx += x;
            Sxx += x * x;
        }
        const double delta = S * Sxx - Sx * Sx;
        f.slope_se = std::sqrt(s2 * S / delta);
        f.intercept_se = std::sqrt(s2 * Sxx / delta);
        f.cov_si = -s2 * Sx / delta;
        f.chi2_dof = s2;
    }
    return f;
}

}  // namespace bethe
