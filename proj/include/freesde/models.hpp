#pragma once

#include "freesde/characteristics.hpp"
#include "freesde/density.hpp"
#include "freesde/polynomial.hpp"

#include "json.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>

namespace freesde {

/// dX = theta X dt + sigma dW, X_0 = 0.
struct OuModel {
    double theta = 0.0;
    double sigma = 1.0;
};

/// dX = theta X dt + X^{1/2} dW X^{1/2}, X_0 = I.
struct Gbm1Model {
    double theta = 0.0;
};

/// dX = theta X dt + X dW + dW X, X_0 = I.
struct Gbm2Model {
    double theta = 0.0;
};

/// dX = k X dW X, X_0 = a I.
struct ExplosiveModel {
    double k = 1.0;
    double a = 1.0;
};

using ModelSpec = std::variant<OuModel, Gbm1Model, Gbm2Model, ExplosiveModel>;

inline std::string model_name(const ModelSpec& spec) {
    static constexpr const char* names[] = {"ou", "gbm1", "gbm2", "explosive"};
    return names[spec.index()];
}

inline void validate(const ModelSpec& spec) {
    auto finite = [](double v) { return std::isfinite(v); };
    std::visit(
        [&](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, OuModel>) {
                require(finite(m.theta), Errc::invalid_config, "ou: theta must be finite");
                require(finite(m.sigma) && m.sigma > 0.0, Errc::invalid_config, "ou: sigma must be positive");
            } else if constexpr (std::is_same_v<M, ExplosiveModel>) {
                require(finite(m.k) && m.k > 0.0, Errc::invalid_config, "explosive: k must be positive");
                require(finite(m.a) && m.a > 0.0, Errc::invalid_config, "explosive: a must be positive");
            } else {
                require(finite(m.theta), Errc::invalid_config, model_name(spec) + ": theta must be finite");
            }
        },
        spec);
}

/// Parses {"model": "ou"|"gbm1"|"gbm2"|"explosive", ...parameters}. Keys
/// that do not belong to the selected model are rejected.
inline ModelSpec parse_model_spec(const nlohmann::json& j) {
    require(j.is_object(), Errc::invalid_config, "model spec must be a JSON object");
    require(j.contains("model") && j["model"].is_string(), Errc::invalid_config,
            "model spec needs a string field 'model'");
    const auto name = j["model"].get<std::string>();
    std::set<std::string> allowed{"model"};
    ModelSpec spec;
    auto number = [&](const char* key) {
        require(j.contains(key), Errc::invalid_config, name + ": missing field '" + key + "'");
        require(j[key].is_number(), Errc::invalid_config, name + ": field '" + key + "' must be a number");
        allowed.insert(key);
        return j[key].get<double>();
    };
    if (name == "ou")
        spec = OuModel{number("theta"), number("sigma")};
    else if (name == "gbm1")
        spec = Gbm1Model{number("theta")};
    else if (name == "gbm2")
        spec = Gbm2Model{number("theta")};
    else if (name == "explosive")
        spec = ExplosiveModel{number("k"), number("a")};
    else
        fail(Errc::invalid_config, "unknown model '" + name + "' (expected ou, gbm1, gbm2 or explosive)");
    for (const auto& [key, value] : j.items())
        require(allowed.count(key) > 0, Errc::invalid_config, name + ": unknown field '" + key + "'");
    validate(spec);
    return spec;
}

inline nlohmann::json to_json(const ModelSpec& spec) {
    return std::visit(
        [](const auto& m) -> nlohmann::json {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, OuModel>)
                return {{"model", "ou"}, {"theta", m.theta}, {"sigma", m.sigma}};
            else if constexpr (std::is_same_v<M, Gbm1Model>)
                return {{"model", "gbm1"}, {"theta", m.theta}};
            else if constexpr (std::is_same_v<M, Gbm2Model>)
                return {{"model", "gbm2"}, {"theta", m.theta}};
            else
                return {{"model", "explosive"}, {"k", m.k}, {"a", m.a}};
        },
        spec);
}

// ---------------------------------------------------------------------------
// Ornstein-Uhlenbeck
// ---------------------------------------------------------------------------

/// Variance sigma^2 (e^{2 theta t} - 1)/(2 theta) of the semicircle law at time t.
inline double ou_variance(double theta, double sigma, double t) {
    const double s2 = sigma * sigma;
    if (std::abs(theta * t) < 1e-8) return s2 * t * (1.0 + theta * t);
    return s2 * std::expm1(2.0 * theta * t) / (2.0 * theta);
}

inline SupportInterval ou_support(double theta, double sigma, double t) {
    require(t >= 0.0, Errc::invalid_argument, "t must be nonnegative");
    const double r = 2.0 * std::sqrt(ou_variance(theta, sigma, t));
    return {-r, r};
}

/// Semicircle density of the OU law at time t > 0.
inline double ou_density(double theta, double sigma, double t, double x) {
    require(t > 0.0, Errc::invalid_argument, "OU density needs t > 0");
    const double r = 2.0 * std::sqrt(ou_variance(theta, sigma, t));
    if (std::abs(x) >= r) return 0.0;
    return 2.0 * std::sqrt(r * r - x * x) / (pi * r * r);
}

/// Cauchy transform of the semicircle law with variance v:
/// g = -2/(z + sqrt(z - r) sqrt(z + r)), r = 2 sqrt(v).
inline Complex semicircle_cauchy(double variance, Complex z) {
    const double r = 2.0 * std::sqrt(variance);
    if (z.imag() == 0.0 && std::abs(z.real()) <= r)
        fail(Errc::on_support_real, "real z = " + format_real(z.real()) + " lies on the support; add i*eps");
    const Complex w = std::sqrt(z - r) * std::sqrt(z + r);
    return -2.0 / (z + w);
}

inline Complex ou_cauchy(double theta, double sigma, double t, Complex z) {
    require(t >= 0.0, Errc::invalid_argument, "t must be nonnegative");
    return semicircle_cauchy(ou_variance(theta, sigma, t), z);
}

// ---------------------------------------------------------------------------
// Geometric Brownian motion I
// ---------------------------------------------------------------------------

/// Support endpoints r/(1 + r) e^{(alpha - r) t} at the two roots r of
/// t r^2 + t r - 1 = 0, alpha = theta - 1.
inline SupportInterval gbm_support(double theta, double t) {
    require(t >= 0.0, Errc::invalid_argument, "t must be nonnegative");
    if (t == 0.0) return {1.0, 1.0};
    const double alpha = theta - 1.0;
    const double root = std::sqrt(1.0 + 4.0 / t);
    const double r1 = 0.5 * (-1.0 + root);
    const double r2 = 0.5 * (-1.0 - root);
    const double z1 = r1 / (1.0 + r1) * std::exp((alpha - r1) * t);
    const double z2 = r2 / (1.0 + r2) * std::exp((alpha - r2) * t);
    return {std::min(z1, z2), std::max(z1, z2)};
}

/// The two branch-point roots (r1, r2) of t r^2 + t r - 1 = 0.
inline std::pair<double, double> gbm_branch_roots(double t) {
    require(t > 0.0, Errc::invalid_argument, "branch roots need t > 0");
    const double root = std::sqrt(1.0 + 4.0 / t);
    return {0.5 * (-1.0 + root), 0.5 * (-1.0 - root)};
}

/// |z + 1/g - e^{(alpha - z g) t}|.
inline double gbm_residual(double theta, double t, Complex z, Complex g) {
    return std::abs(z + 1.0 / g - std::exp((theta - 1.0 - z * g) * t));
}

struct GbmSolverOptions {
    double max_time_step = 0.05;
    int max_halvings = 8;
    /// Accepted roots satisfy residual <= residual_tol * max(1, |z|).
    double residual_tol = 1e-12;
};

namespace detail {

struct GbmEquation {
    double alpha;

    struct Terms {
        Complex f, fg, ft, fz;
    };

    [[nodiscard]] Terms terms(double t, Complex z, Complex g) const {
        const Complex e = std::exp((alpha - z * g) * t);
        return {z + 1.0 / g - e, -1.0 / (g * g) + z * t * e, -(alpha - z * g) * e, 1.0 + g * t * e};
    }

    [[nodiscard]] std::optional<Complex> newton(double t, Complex z, Complex g, double tol) const {
        for (int it = 0; it < 60; ++it) {
            const Terms k = terms(t, z, g);
            if (!is_finite(k.f) || !is_finite(k.fg) || k.fg == 0.0) return std::nullopt;
            Complex step = k.f / k.fg;
            const double limit = 0.5 * std::abs(g);
            if (std::abs(step) > limit) step *= limit / std::abs(step);
            g -= step;
            if (std::abs(step) <= 1e-15 * std::abs(g)) break;
        }
        const Complex f = terms(t, z, g).f;
        if (!is_finite(g) || !(std::abs(f) <= tol)) return std::nullopt;
        return g;
    }
};

struct PathPoint {
    double t;
    Complex z;
    double dt;   // dt/dlambda
    Complex dz;  // dz/dlambda
};

/// Follows the root from lambda = 0 to 1 along a path in (t, z) with a tangent
/// predictor and Newton corrector, halving the step on failure.
inline Complex follow_root(const GbmEquation& eq, const std::function<PathPoint(double)>& path, Complex g,
                           double max_step, const GbmSolverOptions& opt) {
    double lambda = 0.0;
    double step = max_step;
    int failures = 0;
    while (lambda < 1.0) {
        step = std::min(step, 1.0 - lambda);
        const PathPoint p0 = path(lambda);
        const auto k = eq.terms(p0.t, p0.z, g);
        const Complex slope = -(k.ft * p0.dt + k.fz * p0.dz) / k.fg;
        const double next_lambda = step >= 1.0 - lambda ? 1.0 : lambda + step;
        const PathPoint p1 = path(next_lambda);
        const Complex predicted = is_finite(slope) ? g + (next_lambda - lambda) * slope : g;
        const double tol = opt.residual_tol * std::max(1.0, std::abs(p1.z));
        const auto root = eq.newton(p1.t, p1.z, predicted, tol);
        bool ok = root.has_value();
        if (ok && p1.z.imag() > 0.0 && !(root->imag() > 0.0)) ok = false;
        // A corrector far larger than the predicted move means a jump to the other sheet.
        if (ok && std::abs(*root - predicted) > 0.5 * std::abs(predicted - g) + 1e-9 * std::abs(g)) ok = false;
        if (ok) {
            g = *root;
            lambda = next_lambda;
            step = std::min(2.0 * step, max_step);
            failures = 0;
        } else {
            step *= 0.5;
            require(++failures <= opt.max_halvings, Errc::newton_diverged,
                    "GBM continuation failed at t = " + format_real(p1.t) + ", z = " + format_real(p1.z.real()) +
                        (p1.z.imag() < 0 ? "-" : "+") + format_real(std::abs(p1.z.imag())) + "i");
        }
    }
    return g;
}

}  // namespace detail

/// Cauchy transform of the GBM-I law: the Herglotz root of
/// z + 1/g = e^{(alpha - z g) t}, alpha = theta - 1, continued in time from
/// g = 1/(1 - z) at t = 0. Points close to the real axis are first solved at
/// a safe height and then brought down vertically at fixed t.
inline Complex gbm_cauchy(double theta, double t, Complex z, const GbmSolverOptions& opt = {}) {
    require(t >= 0.0 && std::isfinite(t), Errc::invalid_argument, "t must be nonnegative");
    require(is_finite(z), Errc::invalid_argument, "z must be finite");
    if (z.imag() < 0.0) return std::conj(gbm_cauchy(theta, t, std::conj(z), opt));
    if (z.imag() == 0.0) {
        const SupportInterval s = gbm_support(theta, t);
        if (s.contains(z.real()))
            fail(Errc::on_support_real, "real z = " + format_real(z.real()) + " lies on the support; add i*eps");
    }
    if (t == 0.0) return 1.0 / (1.0 - z);

    const detail::GbmEquation eq{theta - 1.0};
    const double x = z.real();
    const double safe_height = 0.5 * std::max(1.0, std::abs(x));
    const Complex start = z.imag() >= safe_height ? z : Complex(x, safe_height);

    const double time_step = std::min(1.0, opt.max_time_step / t);
    auto time_path = [&](double l) { return detail::PathPoint{l * t, start, t, 0.0}; };
    Complex g = detail::follow_root(eq, time_path, 1.0 / (1.0 - start), time_step, opt);
    if (start == z) return g;

    // Vertical descent, halving the height per step.
    const double floor_height = std::max(z.imag(), 1e-14 * std::max(1.0, std::abs(x)));
    const double log_ratio = std::log(floor_height / safe_height);
    const double halvings = std::max(1.0, std::ceil(-log_ratio / std::log(2.0)));
    auto height_path = [&](double l) {
        const double eta = safe_height * std::exp(l * log_ratio);
        return detail::PathPoint{t, Complex(x, eta), 0.0, Complex(0.0, eta * log_ratio)};
    };
    g = detail::follow_root(eq, height_path, g, 1.0 / halvings, opt);
    if (z.imag() == 0.0) {
        const auto root = eq.newton(t, z, g, opt.residual_tol * std::max(1.0, std::abs(z)));
        require(root.has_value(), Errc::newton_diverged, "GBM solve failed on the real axis at x = " + format_real(x));
        g = Complex(root->real(), 0.0);
    }
    require(z.imag() == 0.0 || g.imag() > 0.0, Errc::branch_violation,
            "GBM root left the upper half plane at z = " + format_real(x));
    return g;
}

// ---------------------------------------------------------------------------
// Geometric Brownian motion II
// ---------------------------------------------------------------------------

struct Gbm2Moments {
    double mean;
    double second_moment;
    double std_over_mean;
};

inline Gbm2Moments gbm2_moments(double theta, double t) {
    require(t >= 0.0, Errc::invalid_argument, "t must be nonnegative");
    const double mean = std::exp(theta * t);
    const double second = 2.0 * std::exp(2.0 * (theta + 1.0) * t) - std::exp(2.0 * theta * t);
    return {mean, second, std::sqrt(2.0 * std::expm1(2.0 * t))};
}

// ---------------------------------------------------------------------------
// Explosive model
// ---------------------------------------------------------------------------

inline double blowup_time(double k, double a) {
    require(k > 0.0 && a > 0.0, Errc::invalid_argument, "k and a must be positive");
    return 1.0 / (a * k * a * k);
}

inline constexpr double blowup_guard = 1e-9;

namespace detail {

inline void check_before_blowup(double k, double a, double t) {
    require(t >= 0.0, Errc::invalid_argument, "t must be nonnegative");
    const double tb = blowup_time(k, a);
    require(t < tb * (1.0 - blowup_guard), Errc::past_blowup,
            "t = " + format_real(t) + " is at or past the blow-up time " + format_real(tb));
}

}  // namespace detail

inline SupportInterval explosive_support(double k, double a, double t) {
    detail::check_before_blowup(k, a, t);
    const double s = a * k * std::sqrt(t);
    const double denom = (1.0 - s * s) * (1.0 - s * s);
    return {a * (1.0 - s) * (1.0 - s) / denom, a * (1.0 + s) * (1.0 + s) / denom};
}

/// Herglotz root of k^2 t z^3 g^2 + (z/a - 1 + (a + 2z) z k^2 t) g + 1/a + (z + a) k^2 t = 0.
/// The discriminant factors as ((1 - tau)/a)^2 (z - z-)(z - z+); the branch
/// with sqrt ~ +(1 - tau) z / a at infinity gives g = -1/z - a/z^2 + ...
inline Complex explosive_cauchy(double k, double a, double t, Complex z) {
    detail::check_before_blowup(k, a, t);
    require(is_finite(z), Errc::invalid_argument, "z must be finite");
    if (t == 0.0) {
        require(z != Complex(a, 0.0), Errc::on_support_real, "z coincides with the initial atom");
        return 1.0 / (a - z);
    }
    const SupportInterval s = explosive_support(k, a, t);
    if (z.imag() == 0.0 && s.contains(z.real()))
        fail(Errc::on_support_real, "real z = " + format_real(z.real()) + " lies on the support; add i*eps");
    const double kt = k * k * t;
    const double tau = kt * a * a;
    const Complex qa = kt * z * z * z;
    const Complex qb = z / a - 1.0 + (a + 2.0 * z) * z * kt;
    const Complex qc = 1.0 / a + (z + a) * kt;
    const Complex w = (1.0 - tau) / a * std::sqrt(z - s.lo) * std::sqrt(z - s.hi);
    const Complex plus = -qb + w;
    const Complex minus = -qb - w;
    // Same root either way; pick the form without cancellation.
    return std::abs(minus) >= std::abs(plus) ? 2.0 * qc / minus : plus / (2.0 * qa);
}

/// Explicit density in x; zero outside [z-, z+].
inline double explosive_density(double k, double a, double t, double x) {
    detail::check_before_blowup(k, a, t);
    require(t > 0.0, Errc::invalid_argument, "explosive density needs t > 0");
    const SupportInterval s = explosive_support(k, a, t);
    if (x <= s.lo || x >= s.hi) return 0.0;
    const double tau = k * k * a * a * t;
    const double xi = x / a;
    const double radicand = -(1.0 - tau) * (1.0 - tau) * xi * xi + 2.0 * (1.0 + tau) * xi - 1.0;
    return std::sqrt(std::max(0.0, radicand)) / (2.0 * pi * xi * xi * xi * tau) / a;
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

/// Support of the law at time t.
inline SupportInterval model_support(const ModelSpec& spec, double t) {
    return std::visit(
        [&](const auto& m) -> SupportInterval {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, OuModel>)
                return ou_support(m.theta, m.sigma, t);
            else if constexpr (std::is_same_v<M, Gbm1Model>)
                return gbm_support(m.theta, t);
            else if constexpr (std::is_same_v<M, ExplosiveModel>)
                return explosive_support(m.k, m.a, t);
            else
                fail(Errc::no_transform, "gbm2 has no closed-form support");
        },
        spec);
}

/// Cauchy transform handle for OU, GBM-I and the explosive model.
inline CauchyEvaluator make_evaluator(const ModelSpec& spec) {
    validate(spec);
    return std::visit(
        [&](const auto& m) -> CauchyEvaluator {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, OuModel>) {
                ValidityDomain d{0.0, std::numeric_limits<double>::infinity(), true,
                                 [m](double t) { return ou_support(m.theta, m.sigma, t); }};
                return {[m](double t, Complex z) { return ou_cauchy(m.theta, m.sigma, t, z); }, d, "ou"};
            } else if constexpr (std::is_same_v<M, Gbm1Model>) {
                ValidityDomain d{0.0, std::numeric_limits<double>::infinity(), true,
                                 [m](double t) { return gbm_support(m.theta, t); }};
                return {[m](double t, Complex z) { return gbm_cauchy(m.theta, t, z); }, d, "gbm1"};
            } else if constexpr (std::is_same_v<M, ExplosiveModel>) {
                ValidityDomain d{0.0, blowup_time(m.k, m.a) * (1.0 - blowup_guard), false,
                                 [m](double t) { return explosive_support(m.k, m.a, t); }};
                return {[m](double t, Complex z) { return explosive_cauchy(m.k, m.a, t, z); }, d, "explosive"};
            } else {
                fail(Errc::no_transform,
                     "gbm2 has no closed Cauchy transform; use moments or compare");
            }
        },
        spec);
}

/// Closed-form density where one is known (OU, explosive).
inline std::optional<std::function<double(double)>> analytic_density(const ModelSpec& spec, double t) {
    if (const auto* m = std::get_if<OuModel>(&spec); m && t > 0.0)
        return [m = *m, t](double x) { return ou_density(m.theta, m.sigma, t, x); };
    if (const auto* m = std::get_if<ExplosiveModel>(&spec); m && t > 0.0) {
        detail::check_before_blowup(m->k, m->a, t);
        return [m = *m, t](double x) { return explosive_density(m.k, m.a, t, x); };
    }
    return std::nullopt;
}

/// Drift a and product bc of the coefficient polynomials, with the moments
/// that the reduced equation needs.
struct ModelCoefficients {
    Polynomial a;
    Polynomial bc;
    MomentFunction moments;
    /// Location of the initial atom X_0.
    double initial;
};

inline ModelCoefficients model_coefficients(const ModelSpec& spec) {
    return std::visit(
        [](const auto& m) -> ModelCoefficients {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, OuModel>)
                return {Polynomial{0.0, m.theta}, Polynomial::constant(m.sigma), MomentFunction::trivial(), 0.0};
            else if constexpr (std::is_same_v<M, Gbm1Model>)
                return {Polynomial{0.0, m.theta}, Polynomial{0.0, 1.0}, MomentFunction::trivial(), 1.0};
            else if constexpr (std::is_same_v<M, ExplosiveModel>)
                return {Polynomial{}, Polynomial{0.0, 0.0, m.k}, MomentFunction::constant({m.a}), m.a};
            else
                fail(Errc::no_transform, "gbm2 noise X dW + dW X is not of the form b(X) dW c(X)");
        },
        spec);
}

}  // namespace freesde
