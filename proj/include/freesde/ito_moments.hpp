#pragma once

#include "freesde/models.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace freesde {

/// Catalan numbers by C_{k+1} = sum_i C_i C_{k-i}; exact up to k = 30.
inline std::uint64_t catalan(int k) {
    require(k >= 0, Errc::invalid_argument, "catalan index must be nonnegative");
    require(k <= 30, Errc::overflow, "catalan(" + std::to_string(k) + ") exceeds the exact integer range");
    std::vector<std::uint64_t> c(static_cast<std::size_t>(k) + 1, 0);
    c[0] = 1;
    for (int n = 0; n < k; ++n) {
        std::uint64_t sum = 0;
        for (int i = 0; i <= n; ++i) sum += c[static_cast<std::size_t>(i)] * c[static_cast<std::size_t>(n - i)];
        c[static_cast<std::size_t>(n) + 1] = sum;
    }
    return c[static_cast<std::size_t>(k)];
}

/// E[W_t^n] for the Wigner process: C_{n/2} t^{n/2} for even n, 0 for odd n.
inline double wigner_moment(double t, int n) {
    require(t >= 0.0, Errc::invalid_argument, "t must be nonnegative");
    require(n >= 0 && n <= 60, Errc::invalid_argument, "wigner moment order must be in [0, 60]");
    if (n % 2 != 0) return 0.0;
    return static_cast<double>(catalan(n / 2)) * std::pow(t, n / 2);
}

/// Expectation of both sides of the power formula
///   W_a^n = int_0^a d(W_t^n) + sum_k (n - 2k - 1) C_k int_0^a W_t^{n-2k-2} t^k dt.
/// Every term is c a^{n/2} with rational c, so the coefficients are compared
/// exactly in integers and the residual is |c_lhs - c_rhs| a^{n/2}.
inline double verify_power_identity(int n, double a) {
    require(n % 2 == 0, Errc::odd_order, "power identity needs an even order, got " + std::to_string(n));
    require(n >= 2 && n <= 12, Errc::invalid_argument, "power identity order must be in [2, 12]");
    require(a >= 0.0 && std::isfinite(a), Errc::invalid_argument, "a must be nonnegative");
    const int m = n / 2;
    // E[W_t^{n-2k-2}] t^k = C_{m-1-k} t^{m-1}, integrating to C_{m-1-k} a^m / m.
    std::int64_t rhs_times_m = 0;
    for (int k = 0; k < m; ++k)
        rhs_times_m += static_cast<std::int64_t>(n - 2 * k - 1) * static_cast<std::int64_t>(catalan(k)) *
                       static_cast<std::int64_t>(catalan(m - 1 - k));
    const std::int64_t lhs_times_m = static_cast<std::int64_t>(m) * static_cast<std::int64_t>(catalan(m));
    const auto gap = static_cast<double>(std::llabs(lhs_times_m - rhs_times_m));
    return gap / static_cast<double>(m) * std::pow(a, m);
}

/// Moments of orders 0..2 at time t.
struct MomentSequence {
    double t = 0.0;
    std::vector<double> values;
    /// Computed directly, not as m2 - m1^2, to avoid cancellation.
    double variance = 0.0;
    /// Set when the values are numerically fragile (explosive model near blow-up).
    std::optional<std::string> warning;

    [[nodiscard]] double mean() const { return values.at(1); }
    [[nodiscard]] double second_moment() const { return values.at(2); }
    [[nodiscard]] double std_over_mean() const { return std::sqrt(std::max(0.0, variance)) / std::abs(mean()); }
};

namespace detail {

/// int x^2 f(x) dx over the explosive support by tanh-sinh quadrature.
inline double explosive_second_moment(double k, double a, double t) {
    const SupportInterval s = explosive_support(k, a, t);
    boost::math::quadrature::tanh_sinh<double> quad;
    return quad.integrate([&](double x) { return x * x * explosive_density(k, a, t, x); }, s.lo, s.hi);
}

}  // namespace detail

inline MomentSequence model_moments(const ModelSpec& spec, double t) {
    require(t >= 0.0 && std::isfinite(t), Errc::invalid_argument, "t must be nonnegative");
    validate(spec);
    MomentSequence out;
    out.t = t;
    std::visit(
        [&](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, OuModel>) {
                const double v = ou_variance(m.theta, m.sigma, t);
                out.values = {1.0, 0.0, v};
                out.variance = v;
            } else if constexpr (std::is_same_v<M, Gbm1Model>) {
                const double e2 = std::exp(2.0 * m.theta * t);
                out.values = {1.0, std::exp(m.theta * t), (t + 1.0) * e2};
                out.variance = t * e2;
            } else if constexpr (std::is_same_v<M, Gbm2Model>) {
                const auto g = gbm2_moments(m.theta, t);
                out.values = {1.0, g.mean, g.second_moment};
                out.variance = 2.0 * std::exp(2.0 * m.theta * t) * std::expm1(2.0 * t);
            } else {
                detail::check_before_blowup(m.k, m.a, t);
                if (t == 0.0) {
                    out.values = {1.0, m.a, m.a * m.a};
                    out.variance = 0.0;
                } else {
                    const double m2 = detail::explosive_second_moment(m.k, m.a, t);
                    out.values = {1.0, m.a, m2};
                    out.variance = m2 - m.a * m.a;
                }
                const double tau = t / blowup_time(m.k, m.a);
                if (tau > 0.9)
                    out.warning = "second moment grows without bound as t approaches the blow-up time (t/T = " +
                                  format_real(tau) + ")";
            }
        },
        spec);
    return out;
}

/// CSV `t,mean,second_moment,variance,std_over_mean`.
inline void write_moments_csv(std::ostream& out, const std::vector<MomentSequence>& rows) {
    out << "t,mean,second_moment,variance,std_over_mean\n";
    for (const auto& r : rows) {
        const double ratio = r.mean() != 0.0 ? r.std_over_mean() : std::numeric_limits<double>::quiet_NaN();
        out << format_real(r.t) << ',' << format_real(r.mean()) << ',' << format_real(r.second_moment()) << ','
            << format_real(r.variance) << ',' << format_real(ratio) << '\n';
    }
}

}  // namespace freesde
