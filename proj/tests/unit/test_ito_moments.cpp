#include "freesde/freesde.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include <sstream>

using namespace freesde;

namespace {

Errc code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no freesde::Error thrown";
    return Errc::invalid_argument;
}

/// binom(2k, k)/(k + 1); b stays binom(k + i, i), below 2^64 for k <= 30.
std::uint64_t catalan_closed_form(int k) {
    std::uint64_t b = 1;
    for (int i = 1; i <= k; ++i) b = b * static_cast<std::uint64_t>(k + i) / static_cast<std::uint64_t>(i);
    return b / static_cast<std::uint64_t>(k + 1);
}

}  // namespace

TEST(Catalan, Values) {
    EXPECT_EQ(catalan(0), 1u);
    EXPECT_EQ(catalan(2), 2u);
    EXPECT_EQ(catalan(3), 5u);
    EXPECT_EQ(catalan(10), 16796u);
    EXPECT_EQ(code_of([] { catalan(31); }), Errc::overflow);
}

TEST(Catalan, RecurrenceEqualsClosedForm) {
    for (int k = 0; k <= 30; ++k) EXPECT_EQ(catalan(k), catalan_closed_form(k)) << "k = " << k;
}

TEST(WignerMoment, Values) {
    EXPECT_EQ(wigner_moment(1.0, 2), 1.0);
    EXPECT_EQ(wigner_moment(1.0, 4), 2.0);
    EXPECT_EQ(wigner_moment(2.5, 3), 0.0);
    EXPECT_EQ(wigner_moment(2.0, 6), 5.0 * 8.0);
    EXPECT_EQ(wigner_moment(0.3, 0), 1.0);
}

TEST(PowerIdentity, ExamplesAndErrors) {
    EXPECT_EQ(verify_power_identity(2, 1.0), 0.0);
    EXPECT_LT(verify_power_identity(4, 1.0), 1e-12);
    EXPECT_LT(verify_power_identity(6, 2.0), 1e-12);
    EXPECT_EQ(code_of([] { verify_power_identity(5, 1.0); }), Errc::odd_order);
    EXPECT_THROW(verify_power_identity(14, 1.0), Error);
}

TEST(PowerIdentity, AllAdmissibleOrders) {
    for (int n = 2; n <= 12; n += 2)
        for (double a : {0.5, 1.0, 2.0}) EXPECT_LT(verify_power_identity(n, a), 1e-12) << n << " " << a;
}

TEST(PowerIdentity, QuadratureOracleAgrees) {
    // Both sides evaluated numerically: E W_a^n against the sum of integrals.
    boost::math::quadrature::gauss_kronrod<double, 31> gk;
    for (int n = 2; n <= 12; n += 2)
        for (double a : {0.5, 1.0, 2.0}) {
            double rhs = 0.0;
            for (int k = 0; k <= n / 2 - 1; ++k) {
                const double c = static_cast<double>((n - 2 * k - 1) * static_cast<long long>(catalan(k)));
                rhs += c * gk.integrate([&](double t) { return wigner_moment(t, n - 2 * k - 2) * std::pow(t, k); }, 0.0, a);
            }
            const double lhs = wigner_moment(a, n);
            EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, lhs));
        }
}

TEST(ModelMoments, Examples) {
    const auto g1 = model_moments(Gbm1Model{0.0}, 1.0);
    EXPECT_EQ(g1.mean(), 1.0);
    EXPECT_EQ(g1.second_moment(), 2.0);
    const auto g2 = model_moments(Gbm2Model{0.0}, 0.0);
    EXPECT_EQ(g2.mean(), 1.0);
    EXPECT_EQ(g2.second_moment(), 1.0);
    EXPECT_EQ(g2.variance, 0.0);
    const auto ou = model_moments(OuModel{0.0, 1.0}, 1.0);
    EXPECT_EQ(ou.mean(), 0.0);
    EXPECT_DOUBLE_EQ(ou.second_moment(), 1.0);
    EXPECT_EQ(ou.values.front(), 1.0);
}

TEST(ModelMoments, Gbm1RatioIsSqrtT) {
    for (double th : {-1.0, 0.0, 0.5, 2.0})
        for (double t : {0.1, 1.0, 3.0}) EXPECT_NEAR(model_moments(Gbm1Model{th}, t).std_over_mean(), std::sqrt(t), 1e-12);
}

TEST(ModelMoments, Gbm2RatioGrowsExponentially) {
    for (double th : {-1.0, 0.0, 0.7})
        for (double t : {0.1, 1.0, 2.0})
            EXPECT_NEAR(model_moments(Gbm2Model{th}, t).std_over_mean(), std::sqrt(2.0 * (std::exp(2.0 * t) - 1.0)),
                        1e-12 * std::exp(t));
}

TEST(ModelMoments, ExplosiveSecondMomentFollowsRiccati) {
    // E(dX dX) = k^2 E(X^2) X^2 dt gives m2' = k^2 m2^2, m2(0) = a^2.
    for (double k : {1.0, 0.5})
        for (double a : {1.0, 1.5})
            for (double frac : {0.1, 0.5, 0.8}) {
                const double t = frac * blowup_time(k, a);
                const auto m = model_moments(ExplosiveModel{k, a}, t);
                EXPECT_EQ(m.mean(), a);
                EXPECT_NEAR(m.second_moment(), a * a / (1.0 - k * k * a * a * t), 1e-9 * m.second_moment());
                EXPECT_FALSE(m.warning.has_value());
            }
    EXPECT_NEAR(model_moments(ExplosiveModel{1.0, 1.0}, 0.5).second_moment(), 2.0, 1e-9);
    EXPECT_TRUE(model_moments(ExplosiveModel{1.0, 1.0}, 0.95).warning.has_value());
    EXPECT_EQ(code_of([] { model_moments(ExplosiveModel{1.0, 1.0}, 1.0); }), Errc::past_blowup);
}

TEST(ModelMoments, VarianceIsNonnegative) {
    const std::vector<ModelSpec> specs{OuModel{-1.0, 1.0}, OuModel{0.5, 2.0}, Gbm1Model{-1.0}, Gbm1Model{2.0},
                                       Gbm2Model{0.3},     ExplosiveModel{1.0, 1.0}};
    for (const auto& s : specs)
        for (double t : {0.0, 0.2, 0.6}) {
            const auto m = model_moments(s, t);
            EXPECT_GE(m.variance, 0.0);
            EXPECT_GE(m.second_moment() + 1e-12, m.mean() * m.mean());
        }
}

TEST(ModelMoments, CsvFormat) {
    std::ostringstream out;
    write_moments_csv(out, {model_moments(Gbm1Model{0.0}, 0.0), model_moments(Gbm1Model{0.0}, 4.0)});
    std::istringstream in(out.str());
    std::string header, row0, row1;
    std::getline(in, header);
    std::getline(in, row0);
    std::getline(in, row1);
    EXPECT_EQ(header, "t,mean,second_moment,variance,std_over_mean");
    EXPECT_EQ(row0, "0,1,1,0,0");
    EXPECT_EQ(row1.substr(row1.rfind(',') + 1), "2");
}
