#pragma once

#include "freesde/density.hpp"
#include "freesde/parallel.hpp"
#include "freesde/rmt/matrix_sde.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <vector>

namespace freesde::rmt {

/// Pooled eigenvalue samples at one time with Freedman-Diaconis bins.
struct EigenHistogram {
    double time = 0.0;
    /// Sorted ascending.
    std::vector<double> samples;
    std::vector<double> edges;
    std::vector<std::size_t> counts;

    [[nodiscard]] std::size_t size() const noexcept { return samples.size(); }

    /// Pooled k-th sample moment and its standard error sd(x^k)/sqrt(n).
    [[nodiscard]] std::pair<double, double> moment(int k) const {
        require(!samples.empty(), Errc::empty_histogram, "moment of an empty histogram");
        const auto n = static_cast<double>(samples.size());
        double s1 = 0.0, s2 = 0.0;
        for (double x : samples) {
            const double v = std::pow(x, k);
            s1 += v;
            s2 += v * v;
        }
        const double mean = s1 / n;
        const double var = std::max(0.0, s2 / n - mean * mean) * n / std::max(1.0, n - 1.0);
        return {mean, std::sqrt(var / n)};
    }
};

namespace detail {

inline double quantile_sorted(const std::vector<double>& xs, double q) {
    const double pos = q * static_cast<double>(xs.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double w = pos - static_cast<double>(i);
    return i + 1 < xs.size() ? (1.0 - w) * xs[i] + w * xs[i + 1] : xs[i];
}

}  // namespace detail

inline EigenHistogram make_histogram(double time, std::vector<double> samples) {
    EigenHistogram h;
    h.time = time;
    std::sort(samples.begin(), samples.end());
    h.samples = std::move(samples);
    if (h.samples.empty()) return h;
    const double lo = h.samples.front(), hi = h.samples.back();
    const double iqr = detail::quantile_sorted(h.samples, 0.75) - detail::quantile_sorted(h.samples, 0.25);
    const double width = 2.0 * iqr / std::cbrt(static_cast<double>(h.samples.size()));
    std::size_t bins = 1;
    if (hi > lo && width > 0.0) bins = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil((hi - lo) / width)), 1, 10000);
    h.edges.resize(bins + 1);
    const double span = hi > lo ? hi - lo : 1.0;
    const double base = hi > lo ? lo : lo - 0.5;
    for (std::size_t b = 0; b <= bins; ++b) h.edges[b] = base + span * static_cast<double>(b) / static_cast<double>(bins);
    h.counts.assign(bins, 0);
    for (double x : h.samples) {
        auto b = static_cast<std::size_t>((x - base) / span * static_cast<double>(bins));
        ++h.counts[std::min(b, bins - 1)];
    }
    return h;
}

struct EnsembleResult {
    std::vector<EigenHistogram> histograms;
    /// Per path: square-root clamps plus negative eigenvalue magnitude at
    /// snapshots for models whose solution stays positive.
    std::vector<double> clamp_per_path;
};

/// Evolves cfg.n_paths independent paths and pools eigenvalues at each
/// snapshot time. Paths run in parallel; pooling is in path order.
inline EnsembleResult run_ensemble(const SdeCoefficients& sde, const SimConfig& cfg,
                                   const std::vector<double>& snapshot_times) {
    validate_config(cfg);
    const int steps = step_count(cfg);
    std::vector<int> snap_steps;
    for (double t : snapshot_times) {
        require(t >= 0.0 && t <= cfg.t_end * (1.0 + 1e-12), Errc::invalid_config,
                "snapshot time " + format_real(t) + " outside [0, t_end]");
        const double r = t / cfg.dt;
        const auto s = static_cast<int>(std::llround(r));
        require(std::abs(r - s) <= 1e-6 * std::max(1.0, r), Errc::invalid_config,
                "snapshot time " + format_real(t) + " is not a multiple of dt");
        snap_steps.push_back(s);
    }
    const auto paths = static_cast<std::size_t>(cfg.n_paths);
    const std::size_t snaps = snap_steps.size();
    std::vector<std::vector<std::vector<double>>> eig(paths, std::vector<std::vector<double>>(snaps));
    std::vector<double> clamp(paths, 0.0);

    parallel_for(paths, [&](std::size_t p) {
        StepDiagnostics diag;
        auto record = [&](const Matrix& x, int step) {
            for (std::size_t s = 0; s < snaps; ++s) {
                if (snap_steps[s] != step) continue;
                Eigen::SelfAdjointEigenSolver<Matrix> es(x, Eigen::EigenvaluesOnly);
                require(es.info() == Eigen::Success, Errc::eigen_fail, "eigensolver did not converge");
                const auto& ev = es.eigenvalues();
                eig[p][s].assign(ev.data(), ev.data() + ev.size());
                if (sde.positive)
                    for (double v : eig[p][s])
                        if (v < 0.0) diag.clamp += -v;
            }
        };
        if (cfg.scheme == Scheme::picard) {
            const PicardResult r = picard_solve(sde, cfg, p);
            diag.clamp += r.path.clamp;
            for (int k = 0; k <= steps; ++k) record(r.path.states[static_cast<std::size_t>(k)], k);
        } else {
            Matrix x = sde.initial * Matrix::Identity(cfg.N, cfg.N);
            record(x, 0);
            for (int k = 0; k < steps; ++k) {
                x = euler_step(x, sde, cfg.dt,
                               keyed_increment(cfg.seed, p, static_cast<std::uint64_t>(k), cfg.N, cfg.dt), diag);
                record(x, k + 1);
            }
        }
        clamp[p] = diag.clamp;
    });

    EnsembleResult out;
    out.clamp_per_path = std::move(clamp);
    for (std::size_t s = 0; s < snaps; ++s) {
        std::vector<double> pooled;
        pooled.reserve(paths * static_cast<std::size_t>(cfg.N));
        for (std::size_t p = 0; p < paths; ++p) pooled.insert(pooled.end(), eig[p][s].begin(), eig[p][s].end());
        out.histograms.push_back(make_histogram(snapshot_times[s], std::move(pooled)));
    }
    return out;
}

inline EnsembleResult run_ensemble(const ModelSpec& spec, const SimConfig& cfg,
                                   const std::vector<double>& snapshot_times) {
    validate_config(spec, cfg);
    return run_ensemble(model_sde(spec), cfg, snapshot_times);
}

/// CDF of a sampled density: exact integral of its piecewise-linear interpolant.
class DensityCdf {
public:
    explicit DensityCdf(const DensityCurve& p) : xs_(p.xs), ps_(p.ps), cum_(p.xs.size(), 0.0) {
        for (std::size_t i = 1; i < xs_.size(); ++i)
            cum_[i] = cum_[i - 1] + 0.5 * (ps_[i] + ps_[i - 1]) * (xs_[i] - xs_[i - 1]);
    }

    [[nodiscard]] double operator()(double x) const {
        if (xs_.empty() || x <= xs_.front()) return 0.0;
        if (x >= xs_.back()) return cum_.back();
        const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
        const auto i = static_cast<std::size_t>(it - xs_.begin()) - 1;
        const double h = xs_[i + 1] - xs_[i];
        const double u = x - xs_[i];
        return cum_[i] + ps_[i] * u + (ps_[i + 1] - ps_[i]) * u * u / (2.0 * h);
    }

private:
    std::vector<double> xs_, ps_, cum_;
};

/// sup_x |F_emp(x) - F(x)| with F the cumulative trapezoid of p.
inline double kolmogorov_distance(const EigenHistogram& h, const DensityCurve& p) {
    require(!h.samples.empty(), Errc::empty_histogram, "Kolmogorov distance of an empty histogram");
    const DensityCdf cdf(p);
    const auto n = static_cast<double>(h.samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < h.samples.size(); ++i) {
        const double f = cdf(h.samples[i]);
        d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(f - static_cast<double>(i + 1) / n)});
    }
    return std::min(1.0, d);
}

/// CSV `bin_lo,bin_hi,count`.
inline void write_histogram_csv(std::ostream& out, const EigenHistogram& h) {
    out << "bin_lo,bin_hi,count\n";
    for (std::size_t b = 0; b < h.counts.size(); ++b)
        out << format_real(h.edges[b]) << ',' << format_real(h.edges[b + 1]) << ',' << h.counts[b] << '\n';
}

inline nlohmann::json config_json(const SimConfig& cfg) {
    return {{"N", cfg.N},
            {"dt", cfg.dt},
            {"t_end", cfg.t_end},
            {"n_paths", cfg.n_paths},
            {"seed", cfg.seed},
            {"scheme", cfg.scheme == Scheme::euler ? "euler" : "picard"},
            {"picard_iterations", cfg.picard_iterations},
            {"allow_near_blowup", cfg.allow_near_blowup}};
}

/// Sidecar `{model, config, time, n_samples, kolmogorov_vs_analytic}`.
inline nlohmann::json histogram_sidecar(const ModelSpec& spec, const SimConfig& cfg, const EigenHistogram& h,
                                        std::optional<double> kolmogorov) {
    return {{"model", to_json(spec)},
            {"config", config_json(cfg)},
            {"time", h.time},
            {"n_samples", h.samples.size()},
            {"kolmogorov_vs_analytic", kolmogorov ? nlohmann::json(*kolmogorov) : nlohmann::json(nullptr)}};
}

}  // namespace freesde::rmt
