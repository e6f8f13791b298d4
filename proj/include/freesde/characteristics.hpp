#pragma once

#include "freesde/density.hpp"
#include "freesde/parallel.hpp"
#include "freesde/polynomial.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace freesde {

/// Moments E(X_t^j) for 0 <= j <= jmax. Order 0 is always 1.
class MomentFunction {
public:
    using Function = std::function<double(int, double)>;

    MomentFunction() = default;
    MomentFunction(int jmax, Function fn) : jmax_(jmax), fn_(std::move(fn)) {
        require(jmax >= 0, Errc::invalid_argument, "jmax must be nonnegative");
    }

    /// Only the trivial order-0 moment.
    static MomentFunction trivial() { return {}; }

    /// Time-independent moments, values[j-1] = E(X^j).
    static MomentFunction constant(std::vector<double> values) {
        const int jmax = static_cast<int>(values.size());
        return {jmax, [v = std::move(values)](int j, double) { return v[static_cast<std::size_t>(j - 1)]; }};
    }

    [[nodiscard]] int jmax() const noexcept { return jmax_; }

    [[nodiscard]] double operator()(int j, double t) const {
        if (j == 0) return 1.0;
        if (j < 0 || j > jmax_)
            fail(Errc::moments_unavailable, "moment of order " + std::to_string(j) + " requested, only up to " +
                                                std::to_string(jmax_) + " supplied");
        return fn_(j, t);
    }

private:
    int jmax_ = 0;
    Function fn_;
};

struct ResolventExpectations {
    Complex fG;   // E(f(X)(X - z)^{-1})
    Complex fG2;  // E(f(X)(X - z)^{-2})
};

/// Expresses E(f(X)G) and E(f(X)G^2), G = (X - z)^{-1}, through g = E(G),
/// dg = E(G^2) = dg/dz and the moments of X.
inline ResolventExpectations reduce_resolvent_expectation(const Polynomial& f, Complex g, Complex dg, Complex z,
                                                          const MomentFunction& m, double t) {
    if (f.is_zero()) return {};
    const Complex fz = f(z);
    const Complex dfz = f.derivative()(z);
    if (m.jmax() < f.degree() - 1)
        fail(Errc::moments_unavailable,
             "degree " + std::to_string(f.degree()) + " needs moments up to order " + std::to_string(f.degree() - 1));
    ResolventExpectations out{fz * g, fz * dg + dfz * g};
    if (f.is_constant()) return out;
    const ComplexCoeffs e = divided_difference_expand(f, z);
    const ComplexCoeffs d = detail::synthetic_quotient(e, z);
    for (std::size_t j = 0; j < e.size(); ++j) out.fG += e[j] * m(static_cast<int>(j), t);
    for (std::size_t j = 0; j < d.size(); ++j) out.fG2 += d[j] * m(static_cast<int>(j), t);
    return out;
}

/// dg/dt = -E(a G^2) + E(bc G) E(bc G^2) for dX = a(X)dt + b(X)dW c(X) with
/// polynomial a and bc. The right side is affine in dg/dz, which gives the
/// quasilinear form dg/dt + P dg/dz = Q.
class PdeRightHandSide {
public:
    PdeRightHandSide(Polynomial a, Polynomial bc, MomentFunction m)
        : a_(std::move(a)), bc_(std::move(bc)), m_(std::move(m)) {
        const int needed = std::max(a_.degree(), bc_.degree()) - 1;
        require(m_.jmax() >= needed, Errc::moments_unavailable,
                "coefficients need moments up to order " + std::to_string(needed));
    }

    [[nodiscard]] Complex operator()(double t, Complex z, Complex g, Complex dg) const {
        const auto ea = reduce_resolvent_expectation(a_, g, dg, z, m_, t);
        const auto eb = reduce_resolvent_expectation(bc_, g, dg, z, m_, t);
        return -ea.fG2 + eb.fG * eb.fG2;
    }

    /// P(t, z, g) = a(z) - bc(z) E(bc G).
    [[nodiscard]] Complex transport(double t, Complex z, Complex g) const {
        const auto eb = reduce_resolvent_expectation(bc_, g, 0.0, z, m_, t);
        return a_(z) - bc_(z) * eb.fG;
    }

    /// Q(t, z, g): the right side with dg/dz = 0.
    [[nodiscard]] Complex source(double t, Complex z, Complex g) const { return (*this)(t, z, g, 0.0); }

    [[nodiscard]] const Polynomial& drift() const noexcept { return a_; }
    [[nodiscard]] const Polynomial& diffusion() const noexcept { return bc_; }
    [[nodiscard]] const MomentFunction& moments() const noexcept { return m_; }

private:
    Polynomial a_;
    Polynomial bc_;
    MomentFunction m_;
};

inline PdeRightHandSide build_pde(const Polynomial& a, const Polynomial& bc, const MomentFunction& m) {
    return {a, bc, m};
}

// ---------------------------------------------------------------------------
// Characteristic curves
// ---------------------------------------------------------------------------

/// Contiguous run of labels whose curves may be interpolated between. `outer`
/// marks the end that lies far from the initial support; the physical sheet
/// is traced inward from it up to the first fold.
struct LabelBranch {
    enum class Outer { none, first, last };
    std::size_t first = 0;
    std::size_t last = 0;
    Outer outer = Outer::none;
};

struct LabelGrid {
    std::vector<double> labels;
    std::vector<LabelBranch> branches;
};

/// Real labels on both sides of the initial support, geometrically spaced
/// from `inner_gap` to `outer_span` away from it, `per_side` on each side.
inline LabelGrid two_sided_labels(SupportInterval initial, double inner_gap, double outer_span, std::size_t per_side) {
    require(inner_gap > 0.0 && outer_span > inner_gap, Errc::invalid_argument,
            "label spacing needs 0 < inner_gap < outer_span");
    require(per_side >= 2, Errc::invalid_argument, "need at least 2 labels per side");
    const double ratio = std::pow(outer_span / inner_gap, 1.0 / static_cast<double>(per_side - 1));
    LabelGrid grid;
    grid.labels.resize(2 * per_side);
    double gap = inner_gap;
    for (std::size_t k = 0; k < per_side; ++k, gap *= ratio) {
        grid.labels[per_side - 1 - k] = initial.lo - gap;
        grid.labels[per_side + k] = initial.hi + gap;
    }
    grid.branches = {{0, per_side - 1, LabelBranch::Outer::first},
                     {per_side, 2 * per_side - 1, LabelBranch::Outer::last}};
    return grid;
}

struct CharacteristicSurface {
    std::vector<double> s_grid;
    std::vector<double> t_grid;
    /// z[label][time], g[label][time]; NaN after a curve was truncated.
    std::vector<std::vector<Complex>> z;
    std::vector<std::vector<Complex>> g;
    std::vector<bool> truncated;
    std::vector<LabelBranch> branches;
    /// Adjacent pairs (i, i + 1) within a branch whose ordering by Re z ever
    /// differed from the initial ordering.
    std::vector<bool> crossed;
};

struct CharacteristicOptions {
    /// Store every `record_stride`-th step; the final time is always stored.
    std::size_t record_stride = 1;
    double cutoff = 1e12;
};

using InitialCurve = std::function<std::pair<Complex, Complex>(double)>;

namespace detail {

inline void flag_crossings(CharacteristicSurface& surf) {
    const std::size_t n = surf.s_grid.size();
    surf.crossed.assign(n > 0 ? n - 1 : 0, false);
    for (const auto& br : surf.branches) {
        for (std::size_t i = br.first; i < br.last; ++i) {
            const double d0 = surf.z[i + 1][0].real() - surf.z[i][0].real();
            for (std::size_t j = 1; j < surf.t_grid.size(); ++j) {
                const double d = surf.z[i + 1][j].real() - surf.z[i][j].real();
                if (std::isfinite(d) && d * d0 < 0.0) {
                    surf.crossed[i] = true;
                    break;
                }
            }
        }
    }
}

}  // namespace detail

/// Integrates dz/dt = P(t, z, g), dg/dt = Q(t, z, g) from the initial curve
/// with classical RK4 at a fixed step no larger than dt. Curves leaving the
/// cutoff magnitude are truncated. Each label is integrated independently.
inline CharacteristicSurface integrate_characteristics(const PdeRightHandSide& rhs, const InitialCurve& init,
                                                       const LabelGrid& labels, double t_end, double dt,
                                                       const CharacteristicOptions& options = {}) {
    require(dt > 0.0 && std::isfinite(dt), Errc::invalid_argument, "dt must be positive");
    require(t_end >= 0.0 && std::isfinite(t_end), Errc::invalid_argument, "t_end must be nonnegative");
    require(!labels.labels.empty(), Errc::invalid_argument, "empty label grid");
    require(options.record_stride >= 1, Errc::invalid_argument, "record_stride must be at least 1");

    const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
    const double h = steps > 0 ? t_end / static_cast<double>(steps) : 0.0;

    CharacteristicSurface surf;
    surf.s_grid = labels.labels;
    surf.branches = labels.branches;
    if (surf.branches.empty()) surf.branches = {{0, labels.labels.size() - 1, LabelBranch::Outer::none}};
    for (std::size_t k = 0; k <= steps; ++k)
        if (k % options.record_stride == 0 || k == steps) surf.t_grid.push_back(h * static_cast<double>(k));

    const std::size_t n = surf.s_grid.size();
    const std::size_t records = surf.t_grid.size();
    const Complex nan_value(std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN());
    surf.z.assign(n, std::vector<Complex>(records, nan_value));
    surf.g.assign(n, std::vector<Complex>(records, nan_value));
    std::vector<char> truncated(n, 0);

    using State = std::array<Complex, 2>;
    auto deriv = [&](double t, const State& y) {
        return State{rhs.transport(t, y[0], y[1]), rhs.source(t, y[0], y[1])};
    };
    auto finite = [](const State& y) { return is_finite(y[0]) && is_finite(y[1]); };

    parallel_for(n, [&](std::size_t i) {
        auto [z0, g0] = init(surf.s_grid[i]);
        State y{z0, g0};
        std::size_t slot = 0;
        surf.z[i][slot] = y[0];
        surf.g[i][slot] = y[1];
        ++slot;
        for (std::size_t k = 0; k < steps; ++k) {
            const double t = h * static_cast<double>(k);
            const State k1 = deriv(t, y);
            const State k2 = deriv(t + 0.5 * h, {y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]});
            const State k3 = deriv(t + 0.5 * h, {y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]});
            const State k4 = deriv(t + h, {y[0] + h * k3[0], y[1] + h * k3[1]});
            const State next{y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                             y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])};
            const bool ok = finite(k1) && finite(k2) && finite(k3) && finite(k4) && finite(next);
            if (k == 0)
                require(ok, Errc::step_too_large,
                        "non-finite RK stage on the first step for label " + format_real(surf.s_grid[i]));
            if (!ok || std::abs(next[0]) > options.cutoff || std::abs(next[1]) > options.cutoff) {
                truncated[i] = 1;
                break;
            }
            y = next;
            if ((k + 1) % options.record_stride == 0 || k + 1 == steps) {
                surf.z[i][slot] = y[0];
                surf.g[i][slot] = y[1];
                ++slot;
            }
        }
    });
    surf.truncated.assign(truncated.begin(), truncated.end());
    detail::flag_crossings(surf);
    return surf;
}

inline CharacteristicSurface integrate_characteristics(const PdeRightHandSide& rhs, const InitialCurve& init,
                                                       std::span<const double> s_grid, double t_end, double dt,
                                                       const CharacteristicOptions& options = {}) {
    LabelGrid labels{{s_grid.begin(), s_grid.end()}, {}};
    return integrate_characteristics(rhs, init, labels, t_end, dt, options);
}

namespace detail {

/// Label index range [lo, hi] of the physical sheet of a branch at time slot j.
inline std::pair<std::size_t, std::size_t> physical_range(const CharacteristicSurface& surf, const LabelBranch& br,
                                                          std::size_t j) {
    if (br.outer == LabelBranch::Outer::none) return {br.first, br.last};
    const bool from_last = br.outer == LabelBranch::Outer::last;
    const std::ptrdiff_t step = from_last ? -1 : 1;
    std::ptrdiff_t i = static_cast<std::ptrdiff_t>(from_last ? br.last : br.first);
    const auto stop = static_cast<std::ptrdiff_t>(from_last ? br.first : br.last);
    const auto at = [&](std::ptrdiff_t k, std::size_t slot) { return surf.z[static_cast<std::size_t>(k)][slot]; };
    const std::ptrdiff_t outer = i;
    while (i != stop) {
        const double d0 = at(i + step, 0).real() - at(i, 0).real();
        const double d = at(i + step, j).real() - at(i, j).real();
        if (!is_finite(at(i + step, j)) || !(d * d0 > 0.0)) break;
        i += step;
    }
    const auto a = static_cast<std::size_t>(std::min(i, outer));
    const auto b = static_cast<std::size_t>(std::max(i, outer));
    return {a, b};
}

inline std::optional<Complex> evaluate_slot(const CharacteristicSurface& surf, std::size_t j, Complex z) {
    for (const auto& br : surf.branches) {
        const auto [lo, hi] = physical_range(surf, br, j);
        for (std::size_t i = lo; i < hi; ++i) {
            const Complex za = surf.z[i][j], zb = surf.z[i + 1][j];
            if (!is_finite(za) || !is_finite(zb)) continue;
            const Complex dz = zb - za;
            const double len2 = std::norm(dz);
            if (len2 == 0.0) {
                if (z == za) return surf.g[i][j];
                continue;
            }
            const double lambda = ((z - za) * std::conj(dz)).real() / len2;
            if (lambda < 0.0 || lambda > 1.0) continue;
            const double off = std::abs(z - (za + lambda * dz));
            if (off > 1e-9 * (1.0 + std::abs(z))) continue;
            return (1.0 - lambda) * surf.g[i][j] + lambda * surf.g[i + 1][j];
        }
    }
    return std::nullopt;
}

}  // namespace detail

/// g(t, z) from the surface by linear interpolation between the two curves
/// bracketing z on the physical sheet, and linearly in t between stored
/// times. Never extrapolates.
inline Complex evaluate_on_surface(const CharacteristicSurface& surf, double t, Complex z) {
    const auto& ts = surf.t_grid;
    require(!ts.empty() && t >= ts.front() - 1e-12 && t <= ts.back() + 1e-12, Errc::outside_surface,
            "t = " + format_real(t) + " is outside the surface time range");
    auto at_slot = [&](std::size_t j) {
        const auto v = detail::evaluate_slot(surf, j, z);
        require(v.has_value(), Errc::outside_surface,
                "z = " + format_real(z.real()) + (z.imag() < 0 ? "-" : "+") + format_real(std::abs(z.imag())) +
                    "i is not bracketed by curves at t = " + format_real(ts[j]));
        return *v;
    };
    const auto upper = std::lower_bound(ts.begin(), ts.end(), t);
    const auto j1 = static_cast<std::size_t>(std::min<std::ptrdiff_t>(upper - ts.begin(), ts.size() - 1));
    if (std::abs(ts[j1] - t) <= 1e-12 * std::max(1.0, t)) return at_slot(j1);
    if (j1 > 0 && std::abs(ts[j1 - 1] - t) <= 1e-12 * std::max(1.0, t)) return at_slot(j1 - 1);
    const std::size_t j0 = j1 - 1;
    const double w = (t - ts[j0]) / (ts[j1] - ts[j0]);
    return (1.0 - w) * at_slot(j0) + w * at_slot(j1);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const CharacteristicSurface& surf) {
    auto part = [&](const std::vector<std::vector<Complex>>& v, bool imag) {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& row : v) {
            nlohmann::json r = nlohmann::json::array();
            for (const Complex& c : row) {
                const double x = imag ? c.imag() : c.real();
                r.push_back(std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr));
            }
            rows.push_back(std::move(r));
        }
        return rows;
    };
    nlohmann::json branches = nlohmann::json::array();
    for (const auto& br : surf.branches) {
        const char* outer = br.outer == LabelBranch::Outer::first  ? "first"
                            : br.outer == LabelBranch::Outer::last ? "last"
                                                                   : "none";
        branches.push_back({{"first", br.first}, {"last", br.last}, {"outer", outer}});
    }
    return {{"s_grid", surf.s_grid},
            {"t_grid", surf.t_grid},
            {"z_re", part(surf.z, false)},
            {"z_im", part(surf.z, true)},
            {"g_re", part(surf.g, false)},
            {"g_im", part(surf.g, true)},
            {"truncated", std::vector<bool>(surf.truncated)},
            {"branches", branches}};
}

inline CharacteristicSurface surface_from_json(const nlohmann::json& j) {
    CharacteristicSurface surf;
    try {
        surf.s_grid = j.at("s_grid").get<std::vector<double>>();
        surf.t_grid = j.at("t_grid").get<std::vector<double>>();
        const std::size_t n = surf.s_grid.size(), m = surf.t_grid.size();
        auto read = [&](const char* re, const char* im) {
            std::vector<std::vector<Complex>> out(n, std::vector<Complex>(m));
            const auto& jr = j.at(re);
            const auto& ji = j.at(im);
            require(jr.size() == n && ji.size() == n, Errc::parse_error, "surface JSON: row count mismatch");
            const double nan = std::numeric_limits<double>::quiet_NaN();
            for (std::size_t a = 0; a < n; ++a) {
                require(jr[a].size() == m && ji[a].size() == m, Errc::parse_error, "surface JSON: column count mismatch");
                for (std::size_t b = 0; b < m; ++b)
                    out[a][b] = {jr[a][b].is_null() ? nan : jr[a][b].get<double>(),
                                 ji[a][b].is_null() ? nan : ji[a][b].get<double>()};
            }
            return out;
        };
        surf.z = read("z_re", "z_im");
        surf.g = read("g_re", "g_im");
        surf.truncated = j.at("truncated").get<std::vector<bool>>();
        if (j.contains("branches")) {
            for (const auto& b : j.at("branches")) {
                LabelBranch br{b.at("first").get<std::size_t>(), b.at("last").get<std::size_t>()};
                const auto outer = b.at("outer").get<std::string>();
                br.outer = outer == "first" ? LabelBranch::Outer::first
                           : outer == "last" ? LabelBranch::Outer::last
                                             : LabelBranch::Outer::none;
                require(br.first <= br.last && br.last < n, Errc::parse_error, "surface JSON: bad branch range");
                surf.branches.push_back(br);
            }
        } else if (n > 0) {
            surf.branches = {{0, n - 1, LabelBranch::Outer::none}};
        }
    } catch (const nlohmann::json::exception& e) {
        fail(Errc::parse_error, std::string("surface JSON: ") + e.what());
    }
    detail::flag_crossings(surf);
    return surf;
}

}  // namespace freesde
