// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "freesde/cli/commands.hpp"
#include "freesde/freesde.hpp"

#include <chrono>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>

using namespace freesde;

namespace {

struct Outcome {
    std::vector<std::string> problems;
    std::string summary;

    void check(bool ok, const std::string& what) {
        if (!ok) problems.push_back(what);
    }
    void below(double value, double limit, const std::string& what) {
        check(value < limit, what + " = " + format_real(value) + " (limit " + format_real(limit) + ")");
    }
};

struct Criterion {
    int id;
    std::string name;
    double time_limit;
    std::function<void(Outcome&)> run;
};

double semicircle(double r, double x) { return std::abs(x) >= r ? 0.0 : 2.0 / (pi * r * r) * std::sqrt(r * r - x * x); }

/// Support whose edges are where (1/pi) Im g drops below 1e-6/pi, i.e. Im g < 1e-6.
SupportInterval extracted_support(const CauchyEvaluator& g, double t, const std::vector<double>& xs, double eps) {
    InversionOptions opt;
    opt.support_threshold = 1e-6 / pi;
    return stieltjes_invert(g, t, xs, eps, opt).support;
}

double relative_gap(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

rmt::SimConfig mc_config(int N, int paths, double dt, double t_end, std::uint64_t seed) {
    rmt::SimConfig cfg;
    cfg.N = N;
    cfg.n_paths = paths;
    cfg.dt = dt;
    cfg.t_end = t_end;
    cfg.seed = seed;
    return cfg;
}

void ou_stationary(Outcome& out) {
    const double r = std::sqrt(2.0);
    const auto g = make_evaluator(OuModel{-1.0, 1.0});
    const auto p = stieltjes_invert(g, 30.0, uniform_grid(-1.6, 1.6, 3201), 1e-10);
    double err = 0.0;
    for (std::size_t i = 0; i < p.xs.size(); ++i) err = std::max(err, std::abs(p.ps[i] - semicircle(r, p.xs[i])));
    out.below(err, 1e-4, "max |p - semicircle|");
    out.below(std::max(std::abs(p.support.lo + r), std::abs(p.support.hi - r)), 1e-6, "support endpoint error");
    out.summary = "max error " + format_real(err) + ", support [" + format_real(p.support.lo) + ", " +
                  format_real(p.support.hi) + "]";
}

void ou_monte_carlo(Outcome& out) {
    const ModelSpec m = OuModel{-1.0, 1.0};
    const auto ens = rmt::run_ensemble(m, mc_config(300, 20, 1e-3, 2.0, 101), {2.0});
    const auto ref = cli::reference_density(m, 2.0);
    const double d = rmt::kolmogorov_distance(ens.histograms.front(), *ref);
    out.below(d, 0.05, "Kolmogorov distance");
    out.summary = "Kolmogorov " + format_real(d);
}

void gbm_functional_equation(Outcome& out) {
    double worst_res = 0.0, worst_mass = 0.0, worst_mean = 0.0, worst_var = 0.0, slowest = 0.0;
    for (double theta : {-1.0, 0.0, 0.5, 2.0})
        for (double t : {0.5, 1.0, 2.0}) {
            const auto start = std::chrono::steady_clock::now();
            std::mutex mu;
            double residual = 0.0;
            const CauchyEvaluator g(
                [&](double tt, Complex z) {
                    const Complex v = gbm_cauchy(theta, tt, z);
                    const double r = gbm_residual(theta, tt, z, v);
                    std::lock_guard lock(mu);
                    residual = std::max(residual, r);
                    return v;
                },
                {}, "gbm1");
            const SupportInterval s = gbm_support(theta, t);
            const auto p = stieltjes_invert(g, t, edge_clustered_grid(s, 0.02, 1500, 0.0), 1e-9);
            const double mean = density_moment(p, 1);
            const double var = density_moment(p, 2) - mean * mean;
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            const std::string at = " at theta=" + format_real(theta) + ", t=" + format_real(t);
            out.below(residual, 1e-12, "residual" + at);
            out.below(std::abs(p.mass - 1.0), 1e-3, "|mass - 1|" + at);
            out.below(relative_gap(mean, std::exp(theta * t)), 5e-3, "mean relative error" + at);
            out.below(relative_gap(var, t * std::exp(2.0 * theta * t)), 2e-2, "variance relative error" + at);
            out.below(secs, 30.0, "seconds" + at);
            worst_res = std::max(worst_res, residual);
            worst_mass = std::max(worst_mass, std::abs(p.mass - 1.0));
            worst_mean = std::max(worst_mean, relative_gap(mean, std::exp(theta * t)));
            worst_var = std::max(worst_var, relative_gap(var, t * std::exp(2.0 * theta * t)));
            slowest = std::max(slowest, secs);
        }
    out.summary = "residual " + format_real(worst_res) + ", mass " + format_real(worst_mass) + ", mean rel " +
                  format_real(worst_mean) + ", var rel " + format_real(worst_var) + ", slowest " + format_real(slowest) + " s";
}

void gbm_support_formulas(Outcome& out) {
    const auto [r1, r2] = gbm_branch_roots(4.0 / 3.0);
    out.check(r1 == 0.5 && r2 == -1.5, "r(4/3) = {" + format_real(r1) + ", " + format_real(r2) + "}");
    double worst = 0.0;
    for (double theta : {-1.0, 0.0, 0.5, 2.0})
        for (double t : {0.5, 1.0, 2.0}) {
            const SupportInterval s = gbm_support(theta, t);
            const auto xs = edge_clustered_grid(s, 0.05, 600, 0.0);
            const SupportInterval e = extracted_support(make_evaluator(Gbm1Model{theta}), t, xs, 1e-9);
            const double gap = std::max(relative_gap(e.lo, s.lo), relative_gap(e.hi, s.hi));
            out.below(gap, 1e-3, "endpoint relative gap at theta=" + format_real(theta) + ", t=" + format_real(t));
            worst = std::max(worst, gap);
        }
    out.summary = "worst relative gap " + format_real(worst);
}

void explosive_cross_validation(Outcome& out) {
    const ModelSpec m = ExplosiveModel{1.0, 1.0};
    const auto g = make_evaluator(m);
    double worst = 0.0, worst_support = 0.0;
    for (double t : {0.1, 0.25, 0.5, 0.8}) {
        const SupportInterval s = explosive_support(1.0, 1.0, t);
        const auto p = stieltjes_invert(g, t, uniform_grid(s.lo - 0.05 * s.width(), s.hi + 0.05 * s.width(), 800), 1e-10);
        for (std::size_t i = 0; i < p.xs.size(); ++i)
            worst = std::max(worst, std::abs(p.ps[i] - explosive_density(1.0, 1.0, t, p.xs[i])));
        const double sq = std::sqrt(t);
        const double gap = std::max(std::abs(s.lo - 1.0 / ((1.0 + sq) * (1.0 + sq))), std::abs(s.hi - 1.0 / ((1.0 - sq) * (1.0 - sq))));
        worst_support = std::max(worst_support, gap);
        for (std::size_t i = 0; i < p.xs.size(); ++i) {
            if (p.xs[i] < s.lo || p.xs[i] > s.hi)
                out.below(p.ps[i], 1e-12, "inverted density outside [z-, z+] at t=" + format_real(t));
            else if (p.xs[i] > s.lo && p.xs[i] < s.hi)
                out.check(p.ps[i] > 0.0, "inverted density not positive inside (z-, z+) at t=" + format_real(t));
        }
    }
    out.below(worst, 1e-8, "max |p - formula|");
    out.below(worst_support, 1e-14, "support formula gap");
    const SupportInterval quarter = explosive_support(1.0, 1.0, 0.25);
    out.check(std::abs(quarter.lo - 4.0 / 9.0) < 1e-15 && std::abs(quarter.hi - 4.0) < 1e-14,
              "support at t=1/4 is [" + format_real(quarter.lo) + ", " + format_real(quarter.hi) + "]");

    const auto ens = rmt::run_ensemble(m, mc_config(300, 20, 1e-3, 0.5, 202), {0.25, 0.5});
    std::string ks;
    for (const auto& h : ens.histograms) {
        const double d = rmt::kolmogorov_distance(h, *cli::reference_density(m, h.time));
        out.below(d, 0.05, "Kolmogorov at t=" + format_real(h.time));
        ks += " " + format_real(d);
    }
    const double near_lo = explosive_support(1.0, 1.0, 1.0 - 1e-4).lo;
    out.below(std::abs(near_lo - 0.25), 1e-3, "|z-(1 - 1e-4) - 1/4|");
    out.summary = "density error " + format_real(worst) + ", Kolmogorov" + ks + ", z-(1 - 1e-4) = " + format_real(near_lo);
}

void power_identity(Outcome& out) {
    double worst = 0.0;
    for (int n = 2; n <= 12; n += 2)
        for (double a : {0.5, 1.0, 2.0}) worst = std::max(worst, verify_power_identity(n, a));
    out.below(worst, 1e-12, "residual");
    out.summary = "worst residual " + format_real(worst);
}

void wigner_moments(Outcome& out) {
    const auto ens = rmt::run_ensemble(OuModel{0.0, 1.0}, mc_config(300, 10, 1e-2, 1.0, 303), {1.0});
    const auto [m2, se2] = ens.histograms.front().moment(2);
    const auto [m4, se4] = ens.histograms.front().moment(4);
    out.below(std::abs(m2 - 1.0), 3.0 * se2, "|E l^2 - 1|");
    out.below(std::abs(m4 - 2.0), 3.0 * se4, "|E l^4 - 2|");
    out.summary = "E l^2 = " + format_real(m2) + " (se " + format_real(se2) + "), E l^4 = " + format_real(m4) + " (se " +
                  format_real(se4) + ")";
}

void characteristics_equivalence(Outcome& out) {
    const double theta = -1.0;
    const auto rhs = build_pde(Polynomial{0.0, theta}, Polynomial::constant(1.0), MomentFunction::trivial());
    const auto init = [](double s) { return std::pair<Complex, Complex>{s, -1.0 / s}; };
    const auto surf = integrate_characteristics(rhs, init, two_sided_labels({0.0, 0.0}, 1e-3, 40.0, 2000), 1.0, 1e-3, {10});
    double err = 0.0;
    int points = 0;
    for (double t : {0.3, 0.5, 0.7, 0.9, 1.0}) {
        const double r = ou_support(theta, 1.0, t).hi;
        for (int k = 0; k < 5; ++k) {
            const double x = r + 0.1 + 0.6 * k;
            for (double z : {x, -x}) {
                err = std::max(err, std::abs(evaluate_on_surface(surf, t, z) - ou_cauchy(theta, 1.0, t, z)));
                ++points;
            }
        }
    }
    out.check(points == 50, "point count");
    out.below(err, 1e-4, "max |g_surface - g_closed|");

    auto final_error = [&](double dt) {
        const auto s = integrate_characteristics(rhs, init, std::vector<double>{2.0}, 1.0, dt);
        const double e = std::exp(theta);
        const Complex g0 = -0.5;
        const Complex z = e * (2.0 - g0 * (1.0 - 1.0 / (e * e)) / (2.0 * theta));
        return std::abs(s.z[0].back() - z) + std::abs(s.g[0].back() - g0 / e);
    };
    const double ratio = final_error(0.2) / final_error(0.1);
    out.check(ratio >= 14.0, "RK4 error ratio " + format_real(ratio));
    out.summary = "50 points, max error " + format_real(err) + ", RK4 ratio " + format_real(ratio);
}

void fokker_planck(Outcome& out) {
    const auto g = make_evaluator(OuModel{-1.0, 1.0});
    std::vector<double> residuals;
    for (std::size_t n : {201, 401, 801}) {
        const auto xs = uniform_grid(-1.6, 1.6, n);
        const double h = xs[1] - xs[0];
        const auto a = stieltjes_invert(g, 3.0 - h, xs, 1e-10);
        const auto b = stieltjes_invert(g, 3.0, xs, 1e-10);
        const auto c = stieltjes_invert(g, 3.0 + h, xs, 1e-10);
        residuals.push_back(fokker_planck_residual(a, b, c, Polynomial{0.0, -1.0}).max_abs_smooth());
    }
    out.below(residuals.back(), 5e-3, "finest residual");
    for (std::size_t i = 1; i < residuals.size(); ++i)
        out.check(residuals[i - 1] / residuals[i] > 3.0, "refinement ratio " + format_real(residuals[i - 1] / residuals[i]));
    out.summary = "residuals " + format_real(residuals[0]) + ", " + format_real(residuals[1]) + ", " + format_real(residuals[2]);
}

void property_suites(Outcome& out) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> re(-10.0, 10.0), lg(-3.0, 1.0);
    const std::vector<std::pair<ModelSpec, double>> models{{OuModel{-1.0, 1.0}, 1.0},
                                                           {OuModel{0.5, 2.0}, 0.5},
                                                           {Gbm1Model{0.0}, 1.0},
                                                           {Gbm1Model{-1.0}, 2.0},
                                                           {ExplosiveModel{1.0, 1.0}, 0.5}};
    for (const auto& [m, t] : models) {
        const auto g = make_evaluator(m);
        for (int i = 0; i < 100; ++i) {
            const Complex z(re(rng), std::pow(10.0, lg(rng)));
            out.check(g(t, z).imag() > 0.0, g.name() + ": Im g <= 0");
        }
        const Complex far(0.0, 1e6);
        out.below(std::abs(far * g(t, far) + 1.0), 1e-4, g.name() + " |z g + 1| at 1e6 i");
    }
    bool no_transform = false;
    try {
        make_evaluator(Gbm2Model{0.0});
    } catch (const Error& e) {
        no_transform = e.code() == Errc::no_transform;
    }
    out.check(no_transform, "gbm2 evaluator should be refused");

    // Every curve the density command emits for the shipped configs.
    std::size_t curves = 0;
    for (const auto& entry : std::filesystem::directory_iterator(FREESDE_CONFIG_DIR)) {
        const auto cfg = cli::make_run_config(cli::read_json_file(entry.path().string()), {});
        if (std::holds_alternative<Gbm2Model>(cfg.model) || entry.path().filename().string().rfind("compare", 0) == 0)
            continue;
        for (double t : cfg.times) {
            const DensityCurve p = cli::model_density(cfg, t);
            const DensityCurve q = cli::model_density(cfg, t);
            out.check(p.ps == q.ps, "density not bitwise reproducible");
            out.check(*std::min_element(p.ps.begin(), p.ps.end()) >= 0.0, "negative density");
            out.below(std::abs(p.mass - 1.0), 1e-3, entry.path().filename().string() + " |mass - 1| at t=" + format_real(t));
            std::istringstream in(density_csv(p));
            const auto [xs, ps] = read_density_csv(in);
            out.check(xs == p.xs && ps == p.ps, "CSV round trip differs");
            ++curves;
        }
    }

    const auto cfg = mc_config(40, 3, 0.01, 0.2, 404);
    for (const ModelSpec& m : {ModelSpec{OuModel{-1.0, 1.0}}, ModelSpec{Gbm1Model{0.0}}, ModelSpec{Gbm2Model{0.0}},
                               ModelSpec{ExplosiveModel{1.0, 1.0}}}) {
        const auto a = rmt::run_ensemble(m, cfg, {0.2});
        const auto b = rmt::run_ensemble(m, cfg, {0.2});
        out.check(a.histograms[0].samples == b.histograms[0].samples, model_name(m) + " ensemble not reproducible");
    }
    out.summary = "5 models x 100 points, " + std::to_string(curves) + " emitted curves, 4 seeded ensembles";
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "OU stationary law", 1.0, ou_stationary},
        {2, "OU Monte Carlo agreement", 60.0, ou_monte_carlo},
        {3, "GBM-I functional equation", 360.0, gbm_functional_equation},
        {4, "GBM-I support formulas", 60.0, gbm_support_formulas},
        {5, "explosive cross-validation", 90.0, explosive_cross_validation},
        {6, "free Ito power identity", 1.0, power_identity},
        {7, "Wigner moments", 30.0, wigner_moments},
        {8, "characteristics engine", 10.0, characteristics_equivalence},
        {9, "Fokker-Planck residual", 5.0, fokker_planck},
        {10, "property suites", 30.0, property_suites},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Outcome out;
        const auto start = std::chrono::steady_clock::now();
        try {
            c.run(out);
        } catch (const std::exception& e) {
            out.problems.push_back(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.below(secs, c.time_limit, "runtime seconds");
        const bool ok = out.problems.empty();
        failed += ok ? 0 : 1;
        std::cout << (ok ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << " (" << std::fixed << std::setprecision(2)
                  << secs << " s)" << std::defaultfloat << ": " << out.summary;
        for (const auto& p : out.problems) std::cout << "\n      " << p;
        std::cout << std::endl;
    }
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
