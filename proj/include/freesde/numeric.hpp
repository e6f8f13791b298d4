#pragma once

#include "freesde/error.hpp"

#include <charconv>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace freesde {

/// Argument and value type of Cauchy transforms.
using Complex = std::complex<double>;

inline constexpr double pi = std::numbers::pi;

inline bool is_finite(Complex z) noexcept { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

/// n equally spaced points from lo to hi inclusive. The upper half is laid
/// out from hi, so a grid on [-a, a] is exactly mirror symmetric.
inline std::vector<double> uniform_grid(double lo, double hi, std::size_t n) {
    require(n >= 2, Errc::invalid_argument, "uniform_grid needs at least 2 points");
    require(hi > lo, Errc::invalid_argument, "uniform_grid needs hi > lo");
    std::vector<double> xs(n);
    const double h = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i)
        xs[i] = 2 * i < n - 1 ? lo + h * static_cast<double>(i) : hi - h * static_cast<double>(n - 1 - i);
    if (n % 2 == 1 && lo == -hi) xs[n / 2] = 0.0;
    return xs;
}

/// Grid on [lo, hi] with Chebyshev-Lobatto clustering toward both ends.
inline std::vector<double> clustered_grid(double lo, double hi, std::size_t n) {
    require(n >= 2, Errc::invalid_argument, "clustered_grid needs at least 2 points");
    require(hi > lo, Errc::invalid_argument, "clustered_grid needs hi > lo");
    std::vector<double> xs(n);
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    for (std::size_t i = 0; i < n; ++i) {
        const double angle = pi * static_cast<double>(n - 1 - i) / static_cast<double>(n - 1);
        xs[i] = mid + half * std::cos(angle);
    }
    xs.front() = lo;
    xs.back() = hi;
    return xs;
}

inline bool strictly_increasing(std::span<const double> xs) {
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (!(xs[i] > xs[i - 1])) return false;
    return true;
}

/// Spacing of a uniform grid; throws if any step deviates by more than 1e-6 relative.
inline double uniform_spacing(std::span<const double> xs) {
    require(xs.size() >= 2, Errc::invalid_argument, "grid needs at least 2 points");
    const double h = (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1);
    for (std::size_t i = 1; i < xs.size(); ++i) {
        if (std::abs((xs[i] - xs[i - 1]) - h) > 1e-6 * std::abs(h))
            fail(Errc::invalid_argument, "grid is not uniform");
    }
    return h;
}

/// Trapezoid integral of ys over xs.
inline double trapezoid(std::span<const double> xs, std::span<const double> ys) {
    double sum = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i) sum += 0.5 * (xs[i] - xs[i - 1]) * (ys[i] + ys[i - 1]);
    return sum;
}

/// Decimal text with 17 significant digits (round-trips every double).
inline std::string format_real(double value) {
    char buffer[64];
    auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value, std::chars_format::general, 17);
    if (ec != std::errc{}) fail(Errc::invalid_argument, "cannot format value");
    return std::string(buffer, end);
}

inline double parse_real(std::string_view text) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        fail(Errc::parse_error, "not a number: '" + std::string(text) + "'");
    return value;
}

}  // namespace freesde
