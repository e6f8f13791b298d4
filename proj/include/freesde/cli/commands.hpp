#pragma once

#include "freesde/cli/config.hpp"
#include "freesde/cli/svg.hpp"
#include "freesde/ito_moments.hpp"
#include "freesde/models.hpp"
#include "freesde/rmt/ensemble.hpp"
#include "freesde/stieltjes.hpp"

#include "json.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

namespace freesde::cli {

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_numerical = 3, exit_threshold = 4 };

inline int exit_code_for(const Error& e) {
    return e.code() == Errc::invalid_config || e.code() == Errc::parse_error ? exit_config : exit_numerical;
}

struct CommandResult {
    int exit_code = exit_ok;
    std::vector<std::string> files;
};

namespace detail {

/// Shortest round-trip decimal, for file names.
inline std::string short_real(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return ec == std::errc{} ? std::string(buf, end) : format_real(v);
}

inline std::filesystem::path prepare_dir(const std::string& dir) {
    std::filesystem::path p(dir);
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    require(!ec, Errc::invalid_config, "cannot create output directory '" + dir + "': " + ec.message());
    return p;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), Errc::invalid_config, "cannot write '" + path.string() + "'");
    return out;
}

inline void require_times(const RunConfig& cfg) {
    require(!cfg.times.empty(), Errc::invalid_config, "no times given (config 'times' or --times)");
}

inline std::vector<double> density_grid(const RunConfig& cfg, double t) {
    if (cfg.x_grid) return uniform_grid(cfg.x_grid->lo, cfg.x_grid->hi, cfg.x_grid->n);
    const bool positive = std::holds_alternative<Gbm1Model>(cfg.model) || std::holds_alternative<ExplosiveModel>(cfg.model);
    return edge_clustered_grid(model_support(cfg.model, t), 0.05, 1024,
                               positive ? 0.0 : -std::numeric_limits<double>::infinity());
}

}  // namespace detail

/// Inverted density at time t on the configured grid. A curve that misses
/// normalization is recomputed with eps0 / 100, at most three times.
inline DensityCurve model_density(const RunConfig& cfg, double t, std::ostream* log = nullptr) {
    require(!std::holds_alternative<Gbm2Model>(cfg.model), Errc::invalid_config,
            "gbm2 has no closed Cauchy transform to invert; use 'moments' or 'compare'");
    require(t > 0.0, Errc::invalid_config, "no density at t = 0: the initial law is an atom");
    const CauchyEvaluator g = make_evaluator(cfg.model);
    const auto xs = detail::density_grid(cfg, t);
    double eps = cfg.eps0;
    for (int retry = 0;; ++retry, eps /= 100.0) {
        DensityCurve p = stieltjes_invert(g, t, xs, eps);
        if (retry == 3 || std::abs(p.mass - 1.0) <= default_mass_tolerance) {
            check_full_density(p);
            return p;
        }
        if (log)
            *log << "t=" << detail::short_real(t) << ": mass " << format_real(p.mass) << " at eps0="
                 << detail::short_real(eps) << ", retrying with eps0=" << detail::short_real(eps / 100.0) << '\n';
    }
}

inline CommandResult cmd_density(const RunConfig& cfg, std::ostream& log) {
    detail::require_times(cfg);
    require(!std::holds_alternative<Gbm2Model>(cfg.model), Errc::invalid_config,
            "gbm2 has no closed Cauchy transform to invert; use 'moments' or 'compare'");
    std::vector<DensityCurve> curves;
    for (double t : cfg.times) curves.push_back(model_density(cfg, t, &log));
    const auto dir = detail::prepare_dir(cfg.output_dir);
    CommandResult result;
    const std::string name = model_name(cfg.model);
    for (const auto& p : curves) {
        const auto path = dir / ("density_" + name + "_t" + detail::short_real(p.t) + ".csv");
        auto out = detail::open_output(path);
        write_density_csv(out, p);
        result.files.push_back(path.string());
        log << "t=" << detail::short_real(p.t) << " support=[" << format_real(p.support.lo) << ", "
            << format_real(p.support.hi) << "] mass=" << format_real(p.mass) << " -> " << path.string() << '\n';
    }
    if (cfg.svg) {
        const auto path = dir / ("density_" + name + ".svg");
        auto out = detail::open_output(path);
        write_density_svg(out, curves, name + " spectral density");
        result.files.push_back(path.string());
    }
    return result;
}

inline void write_support_csv(std::ostream& out, const ModelSpec& spec, const std::vector<double>& times) {
    out << "t,lo,hi\n";
    for (double t : times) {
        const SupportInterval s = model_support(spec, t);
        out << format_real(t) << ',' << format_real(s.lo) << ',' << format_real(s.hi) << '\n';
    }
}

inline CommandResult cmd_support(const RunConfig& cfg, std::ostream& log) {
    detail::require_times(cfg);
    std::ostringstream text;
    write_support_csv(text, cfg.model, cfg.times);
    const auto path = detail::prepare_dir(cfg.output_dir) / ("support_" + model_name(cfg.model) + ".csv");
    detail::open_output(path) << text.str();
    log << text.str();
    return {exit_ok, {path.string()}};
}

inline CommandResult cmd_moments(const RunConfig& cfg, std::ostream& log) {
    detail::require_times(cfg);
    std::vector<MomentSequence> rows;
    for (double t : cfg.times) {
        rows.push_back(model_moments(cfg.model, t));
        if (rows.back().warning) log << "warning: " << *rows.back().warning << '\n';
    }
    std::ostringstream text;
    write_moments_csv(text, rows);
    const auto path = detail::prepare_dir(cfg.output_dir) / ("moments_" + model_name(cfg.model) + ".csv");
    detail::open_output(path) << text.str();
    log << text.str();
    return {exit_ok, {path.string()}};
}

/// Reference density for comparisons: the closed form where one exists,
/// otherwise Stieltjes inversion at small eps on a fine grid.
inline std::optional<DensityCurve> reference_density(const ModelSpec& spec, double t) {
    if (std::holds_alternative<Gbm2Model>(spec) || t <= 0.0) return std::nullopt;
    const SupportInterval s = model_support(spec, t);
    const auto xs = uniform_grid(s.lo - 0.01 * s.width(), s.hi + 0.01 * s.width(), 4001);
    if (auto f = analytic_density(spec, t)) {
        DensityCurve p;
        p.t = t;
        p.xs = xs;
        p.ps.resize(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) p.ps[i] = (*f)(xs[i]);
        p.support = s;
        p.mass = trapezoid(p.xs, p.ps);
        return p;
    }
    return stieltjes_invert(make_evaluator(spec), t, xs, 1e-8 * std::max(1.0, s.width()));
}

inline CommandResult cmd_compare(const RunConfig& cfg, std::ostream& log) {
    detail::require_times(cfg);
    rmt::SimConfig sim = cfg.sim;
    sim.t_end = cfg.times.back();
    require(cfg.times.front() > 0.0, Errc::invalid_config, "compare times must be positive");
    const rmt::EnsembleResult ens = rmt::run_ensemble(cfg.model, sim, cfg.times);

    const auto dir = detail::prepare_dir(cfg.output_dir);
    const std::string name = model_name(cfg.model);
    CommandResult result;
    nlohmann::json rows = nlohmann::json::array();
    bool pass = true;
    for (const auto& h : ens.histograms) {
        const MomentSequence m = model_moments(cfg.model, h.time);
        const auto [mc_mean, mc_mean_se] = h.moment(1);
        const auto [mc_m2, mc_m2_se] = h.moment(2);
        std::optional<double> ks;
        if (const auto ref = reference_density(cfg.model, h.time)) ks = rmt::kolmogorov_distance(h, *ref);
        if (ks && *ks > cfg.compare_threshold) pass = false;

        const std::string stem = "histogram_" + name + "_t" + detail::short_real(h.time);
        const auto csv = dir / (stem + ".csv");
        auto out = detail::open_output(csv);
        rmt::write_histogram_csv(out, h);
        const auto sidecar = dir / (stem + ".json");
        detail::open_output(sidecar) << rmt::histogram_sidecar(cfg.model, sim, h, ks).dump(2) << '\n';
        result.files.push_back(csv.string());
        result.files.push_back(sidecar.string());

        rows.push_back({{"t", h.time},
                        {"kolmogorov", ks ? nlohmann::json(*ks) : nlohmann::json(nullptr)},
                        {"mc_mean", mc_mean},
                        {"mc_mean_se", mc_mean_se},
                        {"mc_second_moment", mc_m2},
                        {"mc_second_moment_se", mc_m2_se},
                        {"mean", m.mean()},
                        {"second_moment", m.second_moment()},
                        {"mean_gap", mc_mean - m.mean()},
                        {"second_moment_gap", mc_m2 - m.second_moment()}});
        log << "t=" << detail::short_real(h.time) << " kolmogorov=" << (ks ? format_real(*ks) : std::string("n/a"))
            << " mean_gap=" << format_real(mc_mean - m.mean()) << " second_moment_gap=" << format_real(mc_m2 - m.second_moment())
            << '\n';
    }
    double max_clamp = 0.0;
    for (double c : ens.clamp_per_path) max_clamp = std::max(max_clamp, c);
    const nlohmann::json report{{"model", to_json(cfg.model)},
                                {"config", rmt::config_json(sim)},
                                {"threshold", cfg.compare_threshold},
                                {"max_clamp_per_path", max_clamp},
                                {"times", rows},
                                {"pass", pass}};
    const auto path = dir / ("compare_" + name + ".json");
    detail::open_output(path) << report.dump(2) << '\n';
    result.files.push_back(path.string());
    if (!pass) {
        log << "Kolmogorov distance above threshold " << format_real(cfg.compare_threshold) << '\n';
        result.exit_code = exit_threshold;
    }
    return result;
}

}  // namespace freesde::cli
