#pragma once

#include "freesde/error.hpp"
#include "freesde/numeric.hpp"

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace freesde {

/// Real polynomial, coefficients stored lowest degree first. Trailing zeros are
/// trimmed, so the zero polynomial has no coefficients. Degree is capped at 8.
class Polynomial {
public:
    static constexpr int max_degree = 8;

    Polynomial() = default;

    explicit Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
        while (!coeffs_.empty() && coeffs_.back() == 0.0) coeffs_.pop_back();
        require(degree() <= max_degree, Errc::degree_too_high,
                "polynomial degree " + std::to_string(degree()) + " exceeds " + std::to_string(max_degree));
    }

    Polynomial(std::initializer_list<double> coeffs) : Polynomial(std::vector<double>(coeffs)) {}

    static Polynomial constant(double c) { return Polynomial(std::vector<double>{c}); }

    static Polynomial monomial(int degree, double c = 1.0) {
        std::vector<double> coeffs(static_cast<std::size_t>(degree) + 1, 0.0);
        coeffs.back() = c;
        return Polynomial(std::move(coeffs));
    }

    [[nodiscard]] bool is_zero() const noexcept { return coeffs_.empty(); }

    /// Degree; the zero polynomial reports 0.
    [[nodiscard]] int degree() const noexcept {
        return coeffs_.empty() ? 0 : static_cast<int>(coeffs_.size()) - 1;
    }

    [[nodiscard]] bool is_constant() const noexcept { return coeffs_.size() <= 1; }

    [[nodiscard]] const std::vector<double>& coeffs() const noexcept { return coeffs_; }

    [[nodiscard]] double coeff(int j) const noexcept {
        return j >= 0 && static_cast<std::size_t>(j) < coeffs_.size() ? coeffs_[static_cast<std::size_t>(j)] : 0.0;
    }

    template <typename T>
    [[nodiscard]] T operator()(T x) const {
        T acc{0};
        for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + T(*it);
        return acc;
    }

    [[nodiscard]] Polynomial derivative() const {
        if (coeffs_.size() <= 1) return {};
        std::vector<double> d(coeffs_.size() - 1);
        for (std::size_t j = 1; j < coeffs_.size(); ++j) d[j - 1] = static_cast<double>(j) * coeffs_[j];
        return Polynomial(std::move(d));
    }

    friend bool operator==(const Polynomial&, const Polynomial&) = default;

private:
    std::vector<double> coeffs_;
};

/// Complex-coefficient quotient of a synthetic division, lowest degree first.
using ComplexCoeffs = std::vector<Complex>;

namespace detail {

inline ComplexCoeffs synthetic_quotient(const ComplexCoeffs& f, Complex z) {
    if (f.size() <= 1) return {};
    const std::size_t k = f.size() - 1;
    ComplexCoeffs q(k);
    q[k - 1] = f[k];
    for (std::size_t j = k - 1; j > 0; --j) q[j - 1] = f[j] + z * q[j];
    return q;
}

}  // namespace detail

/// Coefficients e_0..e_{k-1} with (f(X) - f(z))/(X - z) = sum_j e_j(z) X^j,
/// by synthetic division of f by (X - z). Constants give an empty list.
inline ComplexCoeffs divided_difference_expand(const Polynomial& f, Complex z) {
    require(!f.is_zero(), Errc::zero_polynomial, "divided difference of the zero polynomial");
    ComplexCoeffs fc(f.coeffs().begin(), f.coeffs().end());
    return detail::synthetic_quotient(fc, z);
}

/// Coefficients d_j with (f(X) - f(z) - f'(z)(X - z))/(X - z)^2 = sum_j d_j(z) X^j.
/// The first quotient Q satisfies Q(z) = f'(z), so a second division of Q by
/// (X - z) produces the expansion.
inline ComplexCoeffs second_divided_difference_expand(const Polynomial& f, Complex z) {
    return detail::synthetic_quotient(divided_difference_expand(f, z), z);
}

}  // namespace freesde
