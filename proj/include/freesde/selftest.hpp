#pragma once

#include "freesde/characteristics.hpp"
#include "freesde/hilbert.hpp"
#include "freesde/ito_moments.hpp"
#include "freesde/models.hpp"
#include "freesde/rmt/ensemble.hpp"
#include "freesde/stieltjes.hpp"

#include <chrono>
#include <functional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace freesde {

struct SelfCheck {
    std::string name;
    /// Returns an empty string on success, otherwise what went wrong.
    std::function<std::string()> run;
};

namespace detail {

inline std::string expect_below(double value, double limit, const std::string& what) {
    if (value < limit) return {};
    return what + " = " + format_real(value) + " (limit " + format_real(limit) + ")";
}

inline std::string herglotz_and_decay(const CauchyEvaluator& g, double t) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> re(-10.0, 10.0), lg(-3.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const Complex z(re(rng), std::pow(10.0, lg(rng)));
        if (!(g(t, z).imag() > 0.0)) return g.name() + ": Im g <= 0 at z = " + format_real(z.real());
    }
    const Complex far(0.0, 1e6);
    return expect_below(std::abs(far * g(t, far) + 1.0), 1e-4, g.name() + " decay |z g + 1|");
}

}  // namespace detail

inline std::vector<SelfCheck> selftest_checks() {
    using detail::expect_below;
    std::vector<SelfCheck> checks;
    checks.push_back({"semicircle inversion", [] {
        const auto g = make_evaluator(OuModel{0.0, 1.0});
        const auto p = stieltjes_invert(g, 1.0, uniform_grid(-1.8, 1.8, 181), 1e-3);
        double err = 0.0;
        for (std::size_t i = 0; i < p.xs.size(); ++i) err = std::max(err, std::abs(p.ps[i] - ou_density(0.0, 1.0, 1.0, p.xs[i])));
        return expect_below(err, 1e-4, "max error");
    }});
    checks.push_back({"hilbert transform", [] {
        const auto g = make_evaluator(OuModel{0.0, 1.0});
        const auto p = stieltjes_invert(g, 1.0, uniform_grid(-2.5, 2.5, 801), 1e-10);
        return expect_below(std::abs(hilbert_transform(p, 1.0) - 0.5), 2e-3, "|Hp(1) - 1/2|");
    }});
    checks.push_back({"herglotz and decay", [] {
        for (const ModelSpec& m : {ModelSpec{OuModel{-1.0, 1.0}}, ModelSpec{Gbm1Model{0.5}}, ModelSpec{ExplosiveModel{1.0, 1.0}}}) {
            if (auto r = detail::herglotz_and_decay(make_evaluator(m), 0.5); !r.empty()) return r;
        }
        return std::string();
    }});
    checks.push_back({"gbm1 moments", [] {
        const auto g = make_evaluator(Gbm1Model{0.0});
        const SupportInterval s = gbm_support(0.0, 1.0);
        const auto p = stieltjes_invert(g, 1.0, uniform_grid(0.0, s.hi * 1.02, 3001), 1e-9);
        std::string r = expect_below(std::abs(p.mass - 1.0), 1e-3, "|mass - 1|");
        if (r.empty()) r = expect_below(std::abs(density_moment(p, 1) - 1.0), 5e-3, "|mean - 1|");
        return r;
    }});
    checks.push_back({"explosive density", [] {
        const auto g = make_evaluator(ExplosiveModel{1.0, 1.0});
        const SupportInterval s = explosive_support(1.0, 1.0, 0.25);
        const auto p = stieltjes_invert(g, 0.25, uniform_grid(s.lo + 1e-3, s.hi - 1e-3, 200), 1e-10);
        double err = 0.0;
        for (std::size_t i = 0; i < p.xs.size(); ++i)
            err = std::max(err, std::abs(p.ps[i] - explosive_density(1.0, 1.0, 0.25, p.xs[i])));
        return expect_below(err, 1e-8, "max error");
    }});
    checks.push_back({"power identity", [] {
        double worst = 0.0;
        for (int n = 2; n <= 12; n += 2)
            for (double a : {0.5, 1.0, 2.0}) worst = std::max(worst, verify_power_identity(n, a));
        return expect_below(worst, 1e-12, "residual");
    }});
    checks.push_back({"characteristics vs closed form", [] {
        const OuModel m{1.0, 1.0};
        const auto rhs = build_pde(Polynomial{0.0, m.theta}, Polynomial::constant(m.sigma), MomentFunction::trivial());
        const auto labels = two_sided_labels({0.0, 0.0}, 1e-3, 30.0, 400);
        const auto surf = integrate_characteristics(
            rhs, [](double s) { return std::pair<Complex, Complex>{s, -1.0 / s}; }, labels, 0.5, 1e-3, {50});
        const double r = ou_support(m.theta, m.sigma, 0.5).hi;
        double err = 0.0;
        for (double x : {r + 0.2, r + 1.0, -r - 0.5, 4.0})
            err = std::max(err, std::abs(evaluate_on_surface(surf, 0.5, x) - ou_cauchy(m.theta, m.sigma, 0.5, x)));
        return expect_below(err, 1e-4, "max |g_surface - g_closed|");
    }});
    checks.push_back({"fokker-planck residual", [] {
        const auto g = make_evaluator(OuModel{-1.0, 1.0});
        const auto xs = uniform_grid(-1.6, 1.6, 401);
        const double h = xs[1] - xs[0];
        const auto a = stieltjes_invert(g, 3.0 - h, xs, 1e-10);
        const auto b = stieltjes_invert(g, 3.0, xs, 1e-10);
        const auto c = stieltjes_invert(g, 3.0 + h, xs, 1e-10);
        return expect_below(fokker_planck_residual(a, b, c, Polynomial{0.0, -1.0}).max_abs_smooth(), 5e-3, "max residual");
    }});
    checks.push_back({"wigner monte carlo", [] {
        rmt::SimConfig cfg;
        cfg.N = 100;
        cfg.dt = 0.01;
        cfg.t_end = 1.0;
        cfg.n_paths = 3;
        const auto ens = rmt::run_ensemble(OuModel{0.0, 1.0}, cfg, {1.0});
        const auto ref = stieltjes_invert(make_evaluator(OuModel{0.0, 1.0}), 1.0, uniform_grid(-2.2, 2.2, 881), 1e-10);
        return expect_below(rmt::kolmogorov_distance(ens.histograms.front(), ref), 0.05, "Kolmogorov distance");
    }});
    checks.push_back({"csv round trip", [] {
        const auto p = stieltjes_invert(make_evaluator(OuModel{-1.0, 1.0}), 1.0, uniform_grid(-2.0, 2.0, 64), 1e-3);
        std::istringstream in(density_csv(p));
        const auto [xs, ps] = read_density_csv(in);
        return xs == p.xs && ps == p.ps ? std::string() : std::string("re-parsed values differ");
    }});
    return checks;
}

/// Runs every check, printing one PASS/FAIL line each. True if all pass.
inline bool run_selftest(std::ostream& out) {
    bool ok = true;
    for (const auto& check : selftest_checks()) {
        const auto start = std::chrono::steady_clock::now();
        std::string problem;
        try {
            problem = check.run();
        } catch (const std::exception& e) {
            problem = e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        ok = ok && problem.empty();
        out << (problem.empty() ? "PASS " : "FAIL ") << check.name << " (" << std::fixed << std::setprecision(2) << secs
            << " s)" << std::defaultfloat << (problem.empty() ? "" : ": " + problem) << '\n';
    }
    return ok;
}

}  // namespace freesde
