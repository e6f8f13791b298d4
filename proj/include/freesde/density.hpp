#pragma once

#include "freesde/error.hpp"
#include "freesde/numeric.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace freesde {

struct SupportInterval {
    double lo = 0.0;
    double hi = 0.0;

    [[nodiscard]] double width() const noexcept { return hi - lo; }
    [[nodiscard]] double center() const noexcept { return 0.5 * (lo + hi); }
    [[nodiscard]] bool contains(double x) const noexcept { return x >= lo && x <= hi; }

    /// Interval grown by `fraction` of its width on each side.
    [[nodiscard]] SupportInterval widened(double fraction) const noexcept {
        const double pad = fraction * width();
        return {lo - pad, hi + pad};
    }

    friend bool operator==(const SupportInterval&, const SupportInterval&) = default;
};

/// Grid over `s` widened by `pad` of its width per side, never reaching below
/// `floor`. The support itself gets Chebyshev-clustered points, so steep edges
/// are resolved; each pad gets about 3% of the points, uniformly.
inline std::vector<double> edge_clustered_grid(SupportInterval s, double pad, std::size_t n,
                                               double floor = -std::numeric_limits<double>::infinity()) {
    require(n >= 16, Errc::invalid_argument, "edge_clustered_grid needs at least 16 points");
    require(s.width() > 0.0 && pad >= 0.0, Errc::invalid_argument, "edge_clustered_grid needs a nondegenerate support");
    const double w_hi = pad * s.width();
    const double w_lo = std::min(w_hi, std::max(0.0, s.lo - floor));
    const std::size_t side = std::max<std::size_t>(2, n / 32);
    const std::size_t lo_count = w_lo > 0.0 ? side : 0, hi_count = w_hi > 0.0 ? side : 0;
    std::vector<double> xs;
    xs.reserve(n);
    for (std::size_t i = 0; i < lo_count; ++i)
        xs.push_back(s.lo - w_lo + w_lo * static_cast<double>(i) / static_cast<double>(lo_count));
    for (double x : clustered_grid(s.lo, s.hi, n - lo_count - hi_count)) xs.push_back(x);
    for (std::size_t i = 1; i <= hi_count; ++i) xs.push_back(s.hi + w_hi * static_cast<double>(i) / static_cast<double>(hi_count));
    return xs;
}

/// Sampled spectral density on a strictly increasing grid.
struct DensityCurve {
    double t = 0.0;
    std::vector<double> xs;
    std::vector<double> ps;
    SupportInterval support;
    double mass = 0.0;
    /// Grid points where the inverted density came out negative and was set to 0.
    std::size_t clamped_count = 0;
    /// Trapezoid mass of the clamped negative parts.
    double clamped_mass = 0.0;
};

inline constexpr double default_mass_tolerance = 1e-3;

/// Throws unless the curve is a valid full probability density: nonnegative
/// and |mass - 1| <= mass_tolerance.
inline void check_full_density(const DensityCurve& p, double mass_tolerance = default_mass_tolerance) {
    for (double v : p.ps)
        require(v >= 0.0 && std::isfinite(v), Errc::non_finite, "density has negative or non-finite values");
    require(std::abs(p.mass - 1.0) <= mass_tolerance, Errc::invalid_argument,
            "density mass " + format_real(p.mass) + " is not within " + format_real(mass_tolerance) + " of 1");
}

/// Trapezoid integral of x^k p(x). Orders above 8 are refused because tail
/// truncation dominates them.
inline double density_moment(const DensityCurve& p, int k) {
    require(k >= 0, Errc::invalid_argument, "moment order must be nonnegative");
    require(k <= 8, Errc::order_too_high, "moment order " + std::to_string(k) + " exceeds 8");
    std::vector<double> integrand(p.xs.size());
    for (std::size_t i = 0; i < p.xs.size(); ++i) integrand[i] = std::pow(p.xs[i], k) * p.ps[i];
    return trapezoid(p.xs, integrand);
}

/// Where a Cauchy transform handle may be queried.
struct ValidityDomain {
    double t_min = 0.0;
    double t_max = std::numeric_limits<double>::infinity();
    bool t_max_inclusive = true;
    /// Real segment where the transform has its cut at time t, if known.
    std::function<SupportInterval(double)> cut;

    [[nodiscard]] bool contains_time(double t) const noexcept {
        if (!(t >= t_min)) return false;
        return t_max_inclusive ? t <= t_max : t < t_max;
    }
};

/// Immutable handle to g(t, z) = E[(X_t - z)^{-1}].
class CauchyEvaluator {
public:
    using Function = std::function<Complex(double, Complex)>;

    CauchyEvaluator(Function fn, ValidityDomain domain, std::string name = {})
        : fn_(std::move(fn)), domain_(std::move(domain)), name_(std::move(name)) {}

    /// Evaluates g; throws EvaluatorDomain outside the time range and NonFinite
    /// if the underlying function produces NaN/Inf.
    [[nodiscard]] Complex operator()(double t, Complex z) const {
        if (!domain_.contains_time(t))
            fail(Errc::evaluator_domain, "t = " + format_real(t) + " is outside the validity range of " + name_);
        const Complex g = fn_(t, z);
        if (!is_finite(g)) fail(Errc::non_finite, "transform returned a non-finite value at t = " + format_real(t));
        return g;
    }

    [[nodiscard]] const ValidityDomain& domain() const noexcept { return domain_; }
    [[nodiscard]] const std::string& name() const noexcept { return name_; }

private:
    Function fn_;
    ValidityDomain domain_;
    std::string name_;
};

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// CSV with header `x,p`, one row per grid point, 17 significant digits, LF endings.
inline void write_density_csv(std::ostream& out, const DensityCurve& p) {
    out << "x,p\n";
    for (std::size_t i = 0; i < p.xs.size(); ++i) out << format_real(p.xs[i]) << ',' << format_real(p.ps[i]) << '\n';
}

inline std::string density_csv(const DensityCurve& p) {
    std::ostringstream out;
    write_density_csv(out, p);
    return out.str();
}

/// Reads the `x,p` CSV back. Only xs and ps are restored; support and mass
/// are recomputed by the caller if needed.
inline std::pair<std::vector<double>, std::vector<double>> read_density_csv(std::istream& in) {
    std::string line;
    require(static_cast<bool>(std::getline(in, line)) && line == "x,p", Errc::parse_error,
            "density CSV must start with header 'x,p'");
    std::vector<double> xs, ps;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        require(comma != std::string::npos, Errc::parse_error, "line " + std::to_string(line_no) + ": missing comma");
        xs.push_back(parse_real(std::string_view(line).substr(0, comma)));
        ps.push_back(parse_real(std::string_view(line).substr(comma + 1)));
    }
    return {std::move(xs), std::move(ps)};
}

inline nlohmann::json to_json(const DensityCurve& p) {
    return nlohmann::json{{"t", p.t},
                          {"xs", p.xs},
                          {"ps", p.ps},
                          {"support", {{"lo", p.support.lo}, {"hi", p.support.hi}}},
                          {"mass", p.mass}};
}

inline DensityCurve density_from_json(const nlohmann::json& j) {
    DensityCurve p;
    try {
        p.t = j.at("t").get<double>();
        p.xs = j.at("xs").get<std::vector<double>>();
        p.ps = j.at("ps").get<std::vector<double>>();
        p.support = {j.at("support").at("lo").get<double>(), j.at("support").at("hi").get<double>()};
        p.mass = j.at("mass").get<double>();
    } catch (const nlohmann::json::exception& e) {
        fail(Errc::parse_error, std::string("density JSON: ") + e.what());
    }
    require(p.xs.size() == p.ps.size(), Errc::parse_error, "density JSON: xs and ps differ in length");
    return p;
}

}  // namespace freesde
