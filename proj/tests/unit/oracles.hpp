#pragma once

// Independent reference computations used by the tests. Nothing here calls
// the library's numerical routines.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

using Complex = std::complex<double>;
constexpr double pi = std::numbers::pi;

/// Semicircle density of radius r.
inline double semicircle_pdf(double r, double x) {
    return std::abs(x) >= r ? 0.0 : 2.0 / (pi * r * r) * std::sqrt(r * r - x * x);
}

/// Semicircle CDF of radius r, by its antiderivative.
inline double semicircle_cdf(double r, double x) {
    if (x <= -r) return 0.0;
    if (x >= r) return 1.0;
    const double u = x / r;
    return 0.5 + (u * std::sqrt(1.0 - u * u) + std::asin(u)) / pi;
}

/// p.v. int_lo^hi p(y)/(x - y) dy by singularity subtraction:
/// int (p(y) - p(x))/(x - y) dy + p(x) log((x - lo)/(hi - x)), the regular
/// part by composite midpoint with n cells.
inline double pv_transform(const std::function<double(double)>& p, double lo, double hi, double x, int n) {
    const double px = p(x);
    const double h = (hi - lo) / n;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double y = lo + (i + 0.5) * h;
        if (y == x) continue;
        sum += (p(y) - px) / (x - y);
    }
    return sum * h + px * std::log((x - lo) / (hi - x));
}

/// Discrete measure sum_i w_i delta(x_i).
struct AtomicMeasure {
    std::vector<double> atoms;
    std::vector<double> weights;

    [[nodiscard]] double moment(int j) const {
        double m = 0.0;
        for (std::size_t i = 0; i < atoms.size(); ++i) m += weights[i] * std::pow(atoms[i], j);
        return m;
    }
    /// E(f(X) (X - z)^{-power}) by direct summation.
    [[nodiscard]] Complex expect(const std::function<double(double)>& f, Complex z, int power) const {
        Complex s = 0.0;
        for (std::size_t i = 0; i < atoms.size(); ++i) s += weights[i] * f(atoms[i]) / std::pow(atoms[i] - z, power);
        return s;
    }
};

/// Closed-form GBM-I characteristic point: with u = s/(1 - s) the curve
/// through z = s e^{(alpha - u) t} carries g = e^{-(alpha - u) t}/(1 - s).
inline std::pair<Complex, Complex> gbm_characteristic(double theta, double t, Complex s) {
    const Complex u = s / (1.0 - s);
    const Complex e = std::exp((theta - 1.0 - u) * t);
    return {s * e, 1.0 / ((1.0 - s) * e)};
}

}  // namespace oracle
