#pragma once

#include "freesde/density.hpp"
#include "freesde/parallel.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace freesde {

struct InversionOptions {
    /// Density height below which a grid point counts as outside the support.
    double support_threshold = 1e-6;
    /// Largest tolerated trapezoid mass of clamped negative values.
    double clamp_mass_limit = 1e-3;
    /// Bisect the support endpoints below grid resolution.
    bool refine_support = true;
};

namespace detail {

/// (1/pi) Im g(x + i eps) extrapolated to eps -> 0 from {eps, eps/2}.
inline double richardson_density(const CauchyEvaluator& g, double t, double x, double eps) {
    const double coarse = g(t, Complex(x, eps)).imag() / pi;
    const double fine = g(t, Complex(x, 0.5 * eps)).imag() / pi;
    return 2.0 * fine - coarse;
}

inline double bisect_threshold(const CauchyEvaluator& g, double t, double eps, double threshold, double below,
                               double above) {
    // invariant: density(below) < threshold <= density(above)
    for (int iter = 0; iter < 80; ++iter) {
        const double mid = 0.5 * (below + above);
        if (mid == below || mid == above) break;
        if (richardson_density(g, t, mid, eps) >= threshold)
            above = mid;
        else
            below = mid;
    }
    return 0.5 * (below + above);
}

}  // namespace detail

/// Recovers the spectral density at time t on the grid xs by Stieltjes
/// inversion, p(x) = lim (1/pi) Im g(t, x + i eps), using two-point Richardson
/// extrapolation over eps in {eps0, eps0/2}.
///
/// Negative extrapolated values are clamped to zero and counted; the call
/// fails with ExcessClamping when the clamped mass exceeds
/// options.clamp_mass_limit. The support is the smallest interval outside
/// which the density stays below options.support_threshold; its endpoints are
/// refined by bisection between grid points. A curve with no point above the
/// threshold reports a zero-width support at the first grid point.
inline DensityCurve stieltjes_invert(const CauchyEvaluator& g, double t, std::span<const double> xs,
                                     double eps0 = 1e-3, const InversionOptions& options = {}) {
    require(xs.size() >= 2, Errc::invalid_argument, "inversion grid needs at least 2 points");
    require(strictly_increasing(xs), Errc::invalid_argument, "inversion grid must be strictly increasing");
    require(eps0 > 0.0 && std::isfinite(eps0), Errc::invalid_argument, "eps0 must be positive");
    require(g.domain().contains_time(t), Errc::evaluator_domain,
            "t = " + format_real(t) + " is outside the validity range of " + g.name());

    const std::size_t n = xs.size();
    DensityCurve curve;
    curve.t = t;
    curve.xs.assign(xs.begin(), xs.end());
    curve.ps.resize(n);

    parallel_for(n, [&](std::size_t i) { curve.ps[i] = detail::richardson_density(g, t, xs[i], eps0); });

    for (std::size_t i = 0; i < n; ++i) {
        if (curve.ps[i] < 0.0) {
            const double left = i > 0 ? xs[i] - xs[i - 1] : 0.0;
            const double right = i + 1 < n ? xs[i + 1] - xs[i] : 0.0;
            curve.clamped_mass += -curve.ps[i] * 0.5 * (left + right);
            ++curve.clamped_count;
            curve.ps[i] = 0.0;
        }
    }
    require(curve.clamped_mass <= options.clamp_mass_limit, Errc::excess_clamping,
            "clamped negative mass " + format_real(curve.clamped_mass) + " exceeds " +
                format_real(options.clamp_mass_limit));

    curve.mass = trapezoid(curve.xs, curve.ps);

    const double threshold = options.support_threshold;
    std::size_t first = n, last = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (curve.ps[i] >= threshold) {
            if (first == n) first = i;
            last = i;
        }
    }
    if (first == n) {
        curve.support = {xs.front(), xs.front()};
        return curve;
    }
    curve.support = {xs[first], xs[last]};
    if (options.refine_support) {
        if (first > 0)
            curve.support.lo = detail::bisect_threshold(g, t, eps0, threshold, xs[first - 1], xs[first]);
        if (last + 1 < n)
            curve.support.hi = detail::bisect_threshold(g, t, eps0, threshold, xs[last + 1], xs[last]);
    }
    return curve;
}

}  // namespace freesde
