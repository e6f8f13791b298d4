#pragma once

#include "freesde/density.hpp"
#include "freesde/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace freesde {

struct HilbertOptions {
    /// Subtract a square-root edge model at the support endpoints before the
    /// pair quadrature and add its transform back in closed form.
    bool edge_correction = true;
};

namespace detail {

/// s(y) = sqrt((y - lo)(hi - y)) (alpha + beta y) on [lo, hi], zero outside.
struct EdgeModel {
    double lo = 0.0, hi = 0.0, alpha = 0.0, beta = 0.0;
    bool active = false;

    [[nodiscard]] double value(double y) const {
        if (!active || y <= lo || y >= hi) return 0.0;
        return std::sqrt((y - lo) * (hi - y)) * (alpha + beta * y);
    }

    /// p.v. integral of s(y)/(x - y) dy, exact.
    [[nodiscard]] double transform(double x) const {
        if (!active) return 0.0;
        const double mid = 0.5 * (lo + hi);
        const double radius = 0.5 * (hi - lo);
        const double xi = (x - mid) / radius;
        // p.v. int_{-1}^{1} sqrt(1 - u^2)/(xi - u) du
        const double base =
            std::abs(xi) <= 1.0 ? pi * xi : pi * (xi - std::copysign(std::sqrt(xi * xi - 1.0), xi));
        const double a0 = alpha + beta * mid;
        const double a1 = beta * radius;
        return radius * (a0 * base + a1 * (xi * base - 0.5 * pi));
    }
};

/// Fits the square-root coefficient at each support endpoint by linear
/// extrapolation of p(y)/sqrt(|y - edge| (hi - lo)) from the two nearest
/// interior nodes, then matches alpha + beta * edge to it.
inline EdgeModel fit_edge_model(const DensityCurve& p) {
    EdgeModel model;
    const double lo = p.support.lo, hi = p.support.hi;
    if (!(hi > lo)) return model;
    const auto& xs = p.xs;
    const std::size_t n = xs.size();
    std::size_t first = n, last = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (xs[i] > lo && xs[i] < hi) {
            if (first == n) first = i;
            last = i;
        }
    }
    if (first == n || last < first + 3) return model;
    const double width = hi - lo;
    auto extrapolate = [&](std::size_t i1, std::size_t i2, double edge) {
        const double d1 = std::abs(xs[i1] - edge), d2 = std::abs(xs[i2] - edge);
        const double q1 = p.ps[i1] / std::sqrt(d1 * width);
        const double q2 = p.ps[i2] / std::sqrt(d2 * width);
        return q1 - (q2 - q1) / (d2 - d1) * d1;
    };
    const double q_lo = extrapolate(first, first + 1, lo);
    const double q_hi = extrapolate(last, last - 1, hi);
    model.lo = lo;
    model.hi = hi;
    model.beta = (q_hi - q_lo) / width;
    model.alpha = q_lo - model.beta * lo;
    model.active = std::isfinite(model.alpha) && std::isfinite(model.beta);
    return model;
}

inline bool all_zero(const std::vector<double>& ps) {
    return std::all_of(ps.begin(), ps.end(), [](double v) { return v == 0.0; });
}

inline void check_hilbert_grid(const DensityCurve& p) {
    const auto inside = std::count_if(p.xs.begin(), p.xs.end(), [&](double x) { return p.support.contains(x); });
    require(inside >= 16, Errc::grid_too_coarse,
            "only " + std::to_string(inside) + " grid points inside the support (need 16)");
}

/// Symmetric-pair trapezoid rule for p.v. int r(y)/(x - y) dy = int_0^inf [r(x-u) - r(x+u)]/u du,
/// with the u = 0 term -2 r'(x) taken by central difference.
template <typename Sample>
double pair_sum(double x, double x0, double x1, double h, Sample&& sample) {
    const std::size_t steps = static_cast<std::size_t>(std::ceil(std::max(x - x0, x1 - x) / h)) + 1;
    double sum = -0.5 * (sample(x + h) - sample(x - h));
    for (std::size_t k = 1; k <= steps; ++k) {
        const double u = h * static_cast<double>(k);
        sum += (sample(x - u) - sample(x + u)) / static_cast<double>(k);
    }
    return sum;
}

}  // namespace detail

/// Principal-value transform p.v. int p(y)/(x - y) dy of a density sampled on a
/// uniform grid. Values beyond the grid are taken as zero. The pair rule is
/// O(h^2) for smooth densities; with edge correction it stays O(h^2) when the
/// density vanishes like a square root at its support endpoints.
inline double hilbert_transform(const DensityCurve& p, double x, const HilbertOptions& options = {}) {
    const double h = uniform_spacing(p.xs);
    require(p.xs.size() == p.ps.size(), Errc::invalid_argument, "density xs/ps size mismatch");
    require(x >= p.xs.front() && x <= p.xs.back(), Errc::invalid_argument, "x lies outside the density grid");
    if (detail::all_zero(p.ps)) return 0.0;
    detail::check_hilbert_grid(p);

    const detail::EdgeModel edge = options.edge_correction ? detail::fit_edge_model(p) : detail::EdgeModel{};
    const double x0 = p.xs.front(), x1 = p.xs.back();
    const std::size_t n = p.xs.size();

    const double position = (x - x0) / h;
    const double nearest = std::round(position);
    if (std::abs(position - nearest) < 1e-9) {
        // Node-aligned: pair values straight from the samples so symmetric data cancels exactly.
        const auto centre = static_cast<std::ptrdiff_t>(nearest);
        auto remainder = [&](std::ptrdiff_t i) {
            if (i < 0 || i >= static_cast<std::ptrdiff_t>(n)) return 0.0;
            const auto u = static_cast<std::size_t>(i);
            return p.ps[u] - edge.value(p.xs[u]);
        };
        const auto steps = static_cast<std::ptrdiff_t>(n);
        double sum = -0.5 * (remainder(centre + 1) - remainder(centre - 1));
        for (std::ptrdiff_t k = 1; k <= steps; ++k)
            sum += (remainder(centre - k) - remainder(centre + k)) / static_cast<double>(k);
        return sum + edge.transform(x);
    }

    auto sample = [&](double y) {
        if (y < x0 || y > x1) return 0.0;
        const double s = std::min((y - x0) / h, static_cast<double>(n - 1));
        const auto i = std::min(static_cast<std::size_t>(s), n - 2);
        const double w = s - static_cast<double>(i);
        return (1.0 - w) * p.ps[i] + w * p.ps[i + 1] - edge.value(y);
    };
    return detail::pair_sum(x, x0, x1, h, sample) + edge.transform(x);
}

/// Transform at every grid node.
inline std::vector<double> hilbert_transform_grid(const DensityCurve& p, const HilbertOptions& options = {}) {
    std::vector<double> out(p.xs.size());
    for (std::size_t i = 0; i < p.xs.size(); ++i) out[i] = hilbert_transform(p, p.xs[i], options);
    return out;
}

struct FokkerPlanckResidual {
    /// Interior grid nodes (first and last node dropped).
    std::vector<double> xs;
    /// dp/dt + d/dx[p (Hp + a)] at those nodes.
    std::vector<double> residual;
    /// True where the node is at least edge_margin * support width away from
    /// both support endpoints, i.e. where p is differentiable and the
    /// difference stencils do not straddle the square-root edges.
    std::vector<bool> smooth;

    [[nodiscard]] double max_abs_smooth() const {
        double m = 0.0;
        for (std::size_t i = 0; i < residual.size(); ++i)
            if (smooth[i]) m = std::max(m, std::abs(residual[i]));
        return m;
    }
    [[nodiscard]] double max_abs() const {
        double m = 0.0;
        for (double r : residual) m = std::max(m, std::abs(r));
        return m;
    }
};

struct FokkerPlanckOptions {
    double edge_margin = 0.05;
    HilbertOptions hilbert{};
};

/// Residual of the free Fokker-Planck equation dp/dt = -d/dx[p (Hp + a)] for
/// three densities at equally spaced times on a common uniform grid, using
/// central differences in t and x.
inline FokkerPlanckResidual fokker_planck_residual(const DensityCurve& before, const DensityCurve& at,
                                                   const DensityCurve& after, const Polynomial& drift,
                                                   const FokkerPlanckOptions& options = {}) {
    const std::size_t n = at.xs.size();
    require(before.xs.size() == n && after.xs.size() == n, Errc::grid_mismatch, "density grids differ in size");
    for (std::size_t i = 0; i < n; ++i) {
        const double tol = 1e-12 * std::max(1.0, std::abs(at.xs[i]));
        require(std::abs(before.xs[i] - at.xs[i]) <= tol && std::abs(after.xs[i] - at.xs[i]) <= tol,
                Errc::grid_mismatch, "density grids differ at node " + std::to_string(i));
    }
    require(n >= 3, Errc::invalid_argument, "residual needs at least 3 grid nodes");
    const double dt = at.t - before.t;
    require(dt > 0.0 && std::abs((after.t - at.t) - dt) <= 1e-9 * std::max(1.0, std::abs(at.t)),
            Errc::invalid_argument, "densities must be at three equally spaced increasing times");
    const double h = uniform_spacing(at.xs);

    const std::vector<double> hp = hilbert_transform_grid(at, options.hilbert);
    std::vector<double> flux(n);
    for (std::size_t i = 0; i < n; ++i) flux[i] = at.ps[i] * (hp[i] + drift(at.xs[i]));

    FokkerPlanckResidual out;
    out.xs.reserve(n - 2);
    out.residual.reserve(n - 2);
    out.smooth.reserve(n - 2);
    const double margin = options.edge_margin * at.support.width();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double dpdt = (after.ps[i] - before.ps[i]) / (2.0 * dt);
        const double dflux = (flux[i + 1] - flux[i - 1]) / (2.0 * h);
        const double x = at.xs[i];
        out.xs.push_back(x);
        out.residual.push_back(dpdt + dflux);
        out.smooth.push_back(std::min(std::abs(x - at.support.lo), std::abs(x - at.support.hi)) >= margin);
    }
    return out;
}

}  // namespace freesde
