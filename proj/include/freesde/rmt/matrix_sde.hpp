#pragma once

#include "freesde/models.hpp"
#include "freesde/rmt/rng.hpp"

#include <Eigen/Dense>
#include <boost/random/normal_distribution.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace freesde::rmt {

using Matrix = Eigen::MatrixXd;

enum class Scheme { euler, picard };

struct SimConfig {
    int N = 100;
    double dt = 1e-3;
    double t_end = 1.0;
    int n_paths = 10;
    std::uint64_t seed = 1;
    Scheme scheme = Scheme::euler;
    /// Iteration cap for the Picard scheme.
    int picard_iterations = 50;
    /// Permit explosive-model runs past 0.9 of the blow-up time.
    bool allow_near_blowup = false;
};

inline int step_count(const SimConfig& cfg) {
    const double ratio = cfg.t_end / cfg.dt;
    const auto steps = static_cast<int>(std::llround(ratio));
    require(std::abs(ratio - steps) <= 1e-6 * std::max(1.0, ratio), Errc::invalid_config,
            "t_end must be a whole number of dt steps");
    return steps;
}

inline void validate_config(const SimConfig& cfg) {
    require(cfg.N >= 2, Errc::invalid_config, "N must be at least 2");
    require(cfg.dt > 0.0 && std::isfinite(cfg.dt), Errc::invalid_config, "dt must be positive");
    require(std::isfinite(cfg.t_end) && cfg.dt <= cfg.t_end, Errc::invalid_config, "dt must not exceed t_end");
    require(cfg.n_paths >= 1, Errc::invalid_config, "n_paths must be positive");
    require(cfg.picard_iterations >= 1, Errc::invalid_config, "picard_iterations must be positive");
    step_count(cfg);
}

inline void validate_config(const ModelSpec& spec, const SimConfig& cfg) {
    validate_config(cfg);
    if (const auto* m = std::get_if<ExplosiveModel>(&spec)) {
        const double tb = blowup_time(m->k, m->a);
        require(cfg.t_end < tb, Errc::invalid_config, "t_end is past the blow-up time " + format_real(tb));
        require(cfg.allow_near_blowup || cfg.t_end <= 0.9 * tb, Errc::invalid_config,
                "t_end exceeds 0.9 of the blow-up time; set allow_near_blowup to override");
    }
}

/// Symmetric increment with off-diagonal entries N(0, dt/N) and diagonal
/// entries N(0, 2 dt/N), so E[tr(dW^2)/N] = dt (1 + 1/N).
template <typename Engine>
Matrix sample_wigner_increment(int N, double dt, Engine& rng) {
    require(N >= 1, Errc::invalid_argument, "N must be positive");
    require(dt >= 0.0, Errc::invalid_argument, "dt must be nonnegative");
    Matrix m(N, N);
    if (dt == 0.0) return Matrix::Zero(N, N);
    boost::random::normal_distribution<double> normal;
    const double off = std::sqrt(dt / N);
    const double diag = std::sqrt(2.0 * dt / N);
    for (int j = 0; j < N; ++j) {
        for (int i = 0; i < j; ++i) {
            const double v = off * normal(rng);
            m(i, j) = v;
            m(j, i) = v;
        }
        m(j, j) = diag * normal(rng);
    }
    return m;
}

/// The increment used at (path, step) of a run with the given seed.
inline Matrix keyed_increment(std::uint64_t seed, std::uint64_t path, std::uint64_t step, int N, double dt) {
    CounterRng rng(seed, path, step);
    return sample_wigner_increment(N, dt, rng);
}

struct StepDiagnostics {
    /// Total magnitude of negative eigenvalues set to zero before square roots.
    double clamp = 0.0;
};

/// PSD square root by eigendecomposition, negative eigenvalues clamped to 0.
inline Matrix psd_sqrt(const Matrix& x, StepDiagnostics& diag) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(x);
    require(es.info() == Eigen::Success, Errc::eigen_fail, "eigensolver did not converge");
    Eigen::VectorXd lambda = es.eigenvalues();
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (lambda[i] < 0.0) {
            diag.clamp += -lambda[i];
            lambda[i] = 0.0;
        }
        lambda[i] = std::sqrt(lambda[i]);
    }
    return es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose();
}

/// dX = a(X) dt + noise(X, dW).
struct SdeCoefficients {
    using Drift = std::function<Matrix(const Matrix&)>;
    using Noise = std::function<Matrix(const Matrix&, const Matrix&, StepDiagnostics&)>;

    Drift drift;
    Noise noise;
    /// X_0 = initial * I.
    double initial = 0.0;
    /// The exact solution stays positive semidefinite.
    bool positive = false;
    std::string name;
};

namespace detail {

inline Matrix matrix_polynomial(const Polynomial& p, const Matrix& x) {
    const auto& c = p.coeffs();
    if (c.empty()) return Matrix::Zero(x.rows(), x.cols());
    Matrix acc = c.back() * Matrix::Identity(x.rows(), x.cols());
    for (auto it = c.rbegin() + 1; it != c.rend(); ++it) {
        acc = acc * x;
        acc.diagonal().array() += *it;
    }
    return acc;
}

}  // namespace detail

/// dX = a(X) dt + b(X) dW c(X) for polynomial a, b, c and X_0 = x0 I.
inline SdeCoefficients polynomial_sde(Polynomial a, Polynomial b, Polynomial c, double x0) {
    SdeCoefficients sde;
    sde.initial = x0;
    sde.name = "polynomial";
    sde.drift = [a](const Matrix& x) { return detail::matrix_polynomial(a, x); };
    if (b.is_constant() && c.is_constant()) {
        const double s = b.coeff(0) * c.coeff(0);
        sde.noise = [s](const Matrix&, const Matrix& dw, StepDiagnostics&) -> Matrix { return s * dw; };
    } else {
        sde.noise = [b, c](const Matrix& x, const Matrix& dw, StepDiagnostics&) -> Matrix {
            return detail::matrix_polynomial(b, x) * dw * detail::matrix_polynomial(c, x);
        };
    }
    return sde;
}

inline SdeCoefficients model_sde(const ModelSpec& spec) {
    validate(spec);
    return std::visit(
        [](const auto& m) -> SdeCoefficients {
            using M = std::decay_t<decltype(m)>;
            SdeCoefficients sde;
            if constexpr (std::is_same_v<M, OuModel>) {
                sde.initial = 0.0;
                sde.drift = [th = m.theta](const Matrix& x) -> Matrix { return th * x; };
                sde.noise = [s = m.sigma](const Matrix&, const Matrix& dw, StepDiagnostics&) -> Matrix {
                    return s * dw;
                };
            } else if constexpr (std::is_same_v<M, Gbm1Model>) {
                sde.initial = 1.0;
                sde.positive = true;
                sde.drift = [th = m.theta](const Matrix& x) -> Matrix { return th * x; };
                sde.noise = [](const Matrix& x, const Matrix& dw, StepDiagnostics& d) -> Matrix {
                    const Matrix r = psd_sqrt(x, d);
                    return r * dw * r;
                };
            } else if constexpr (std::is_same_v<M, Gbm2Model>) {
                sde.initial = 1.0;
                sde.drift = [th = m.theta](const Matrix& x) -> Matrix { return th * x; };
                sde.noise = [](const Matrix& x, const Matrix& dw, StepDiagnostics&) -> Matrix {
                    const Matrix xd = x * dw;
                    return xd + xd.transpose();
                };
            } else {
                sde.initial = m.a;
                sde.positive = true;
                sde.drift = [](const Matrix& x) -> Matrix { return Matrix::Zero(x.rows(), x.cols()); };
                sde.noise = [k = m.k](const Matrix& x, const Matrix& dw, StepDiagnostics&) -> Matrix {
                    Matrix xd = x * dw;
                    return k * (xd * x);
                };
            }
            sde.name = model_name(ModelSpec{m});
            return sde;
        },
        spec);
}

/// X + a(X) dt + noise(X, dW), symmetrized as (M + M^T)/2.
inline Matrix euler_step(const Matrix& x, const SdeCoefficients& sde, double dt, const Matrix& dw,
                         StepDiagnostics& diag) {
    Matrix next = x + dt * sde.drift(x) + sde.noise(x, dw, diag);
    return 0.5 * (next + next.transpose());
}

template <typename Engine>
Matrix euler_step(const Matrix& x, const ModelSpec& spec, double dt, Engine& rng, StepDiagnostics& diag) {
    const Matrix dw = sample_wigner_increment(static_cast<int>(x.rows()), dt, rng);
    return euler_step(x, model_sde(spec), dt, dw, diag);
}

struct MatrixPath {
    std::vector<double> t_grid;
    std::vector<Matrix> states;
    double clamp = 0.0;
};

/// One Euler path driven by the keyed increments of `path`.
inline MatrixPath euler_path(const SdeCoefficients& sde, const SimConfig& cfg, std::uint64_t path = 0) {
    validate_config(cfg);
    const int steps = step_count(cfg);
    MatrixPath out;
    out.t_grid.reserve(static_cast<std::size_t>(steps) + 1);
    out.states.reserve(static_cast<std::size_t>(steps) + 1);
    Matrix x = sde.initial * Matrix::Identity(cfg.N, cfg.N);
    out.t_grid.push_back(0.0);
    out.states.push_back(x);
    StepDiagnostics diag;
    for (int k = 0; k < steps; ++k) {
        x = euler_step(x, sde, cfg.dt, keyed_increment(cfg.seed, path, static_cast<std::uint64_t>(k), cfg.N, cfg.dt),
                       diag);
        out.t_grid.push_back(cfg.dt * (k + 1));
        out.states.push_back(x);
    }
    out.clamp = diag.clamp;
    return out;
}

inline double scaled_frobenius(const Matrix& m) { return m.norm() / std::sqrt(static_cast<double>(m.rows())); }

struct PicardResult {
    MatrixPath path;
    /// Largest scaled Frobenius difference between successive iterates, per iteration.
    std::vector<double> differences;
    /// differences[n] / differences[n - 1].
    std::vector<double> contraction;
    int iterations = 0;
    bool converged = false;
};

/// Successive approximations X^{(n+1)}_t = X_0 + int a(X^{(n)}) dt + int noise(X^{(n)}, dW)
/// on the dt grid, every iteration driven by the same keyed increments. The
/// discrete fixed point is the Euler path on that noise.
inline PicardResult picard_solve(const SdeCoefficients& sde, const SimConfig& cfg, std::uint64_t path = 0,
                                 double tolerance = 1e-8) {
    validate_config(cfg);
    const int steps = step_count(cfg);
    const auto count = static_cast<std::size_t>(steps) + 1;
    const Matrix x0 = sde.initial * Matrix::Identity(cfg.N, cfg.N);

    std::vector<Matrix> increments;
    increments.reserve(static_cast<std::size_t>(steps));
    for (int k = 0; k < steps; ++k)
        increments.push_back(keyed_increment(cfg.seed, path, static_cast<std::uint64_t>(k), cfg.N, cfg.dt));

    PicardResult out;
    out.path.t_grid.resize(count);
    for (std::size_t k = 0; k < count; ++k) out.path.t_grid[k] = cfg.dt * static_cast<double>(k);
    std::vector<Matrix> current(count, x0);
    int growth = 0;
    for (int it = 1; it <= cfg.picard_iterations; ++it) {
        StepDiagnostics diag;
        std::vector<Matrix> next(count);
        next[0] = x0;
        Matrix acc = x0;
        double diff = 0.0;
        for (int k = 0; k < steps; ++k) {
            const Matrix& x = current[static_cast<std::size_t>(k)];
            acc += cfg.dt * sde.drift(x) + sde.noise(x, increments[static_cast<std::size_t>(k)], diag);
            acc = 0.5 * (acc + acc.transpose()).eval();
            next[static_cast<std::size_t>(k) + 1] = acc;
            diff = std::max(diff, scaled_frobenius(acc - current[static_cast<std::size_t>(k) + 1]));
        }
        if (!out.differences.empty()) {
            out.contraction.push_back(out.differences.back() > 0.0 ? diff / out.differences.back() : 0.0);
            growth = diff > out.differences.back() ? growth + 1 : 0;
        }
        out.differences.push_back(diff);
        current = std::move(next);
        out.path.clamp = diag.clamp;
        out.iterations = it;
        require(growth < 3, Errc::no_contraction,
                "Picard differences grew for 3 consecutive iterations; t_end is too large for the scheme");
        if (diff < tolerance) {
            out.converged = true;
            break;
        }
    }
    out.path.states = std::move(current);
    return out;
}

}  // namespace freesde::rmt
