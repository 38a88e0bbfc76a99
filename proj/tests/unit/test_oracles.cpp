#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <gtest/gtest.h>

#include "lyapsim/errors.hpp"
#include "lyapsim/lyapunov.hpp"
#include "lyapsim/oracles.hpp"

using namespace lyapsim;

namespace {

using Big = boost::multiprecision::cpp_bin_float_50;

double ft_direct(double alpha, double kappa, double t, double R) {
    const double c = (std::pow(2.0, 1.0 - kappa) - 1.0) / (1.0 - kappa);
    return -std::expm1(-std::min(c * std::pow(R, 1.0 - kappa), t) * std::pow(2.0 * R, -alpha));
}

template <class F>
double simpson(F f, double a, double b, int n) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

}  // namespace

TEST(Storage, CKappa) {
    EXPECT_DOUBLE_EQ(storage_c_kappa(0.0), 1.0);
    EXPECT_DOUBLE_EQ(storage_c_kappa(-1.0), 1.5);
    // c_kappa = ln 2 + (ln 2)^2 (1 - kappa) / 2 + O((1 - kappa)^2).
    EXPECT_NEAR(storage_c_kappa(1.0 - 1e-6), std::numbers::ln2 + 0.5e-6 * std::numbers::ln2 * std::numbers::ln2, 1e-9);
    EXPECT_THROW(storage_c_kappa(1.0), DomainError);
    EXPECT_THROW(storage_c_kappa(-1.5), DomainError);
}

TEST(Storage, LimitAgainstHighPrecision) {
    const Big exact = 1 - boost::multiprecision::exp(Big(-0.025));
    const auto r = storage_tail_lower_bound_limit(2.0, 0.0, 10.0);
    EXPECT_NEAR(r.value, exact.convert_to<double>(), 1e-17);
    EXPECT_EQ(r.formula, Formula::f_inf);
    EXPECT_FALSE(r.infinite);
}

TEST(Storage, FiniteTimeBoundMatchesFormula) {
    for (double kappa : {-1.0, -0.3, 0.0, 0.5})
        for (double t : {1.0, 10.0, 1e3})
            for (double R : {1.5, 10.0, 1e3}) {
                const double v = storage_tail_lower_bound(2.5, kappa, t, R).value;
                EXPECT_NEAR(v, ft_direct(2.5, kappa, t, R), 1e-14 + 1e-10 * v) << kappa << " " << t << " " << R;
            }
}

TEST(Storage, FiniteTimeIncreasesToLimit) {
    for (double R : {2.0, 30.0, 1e6}) {
        double prev = 0.0;
        for (double t : {0.1, 1.0, 10.0, 100.0, 1e4, 1e8}) {
            const double v = storage_tail_lower_bound(1.5, 0.0, t, R).value;
            EXPECT_GE(v, prev);
            prev = v;
        }
        EXPECT_DOUBLE_EQ(prev, storage_tail_lower_bound_limit(1.5, 0.0, R).value);
        const double inf = storage_tail_lower_bound(1.5, 0.0, std::numeric_limits<double>::infinity(), R).value;
        EXPECT_DOUBLE_EQ(inf, prev);
    }
}

TEST(Storage, TailAsymptoticAtLargeR) {
    // f_t(R) ~ t (2R)^{-alpha} once c R^{1-kappa} > t.
    const double R = 1e6, t = 50.0;
    EXPECT_NEAR(storage_tail_lower_bound(2.5, 0.0, t, R).value, t * std::pow(2 * R, -2.5), 1e-6 * t * std::pow(2 * R, -2.5));
    EXPECT_THROW(storage_tail_lower_bound(2.5, 0.0, t, 1.0), DomainError);
}

TEST(Storage, MomentLowerBoundAgainstSimpson) {
    const double alpha = 2.5, kappa = 0.0, t = 50.0, q = 1.6;
    // R = e^y; the min() switches at R = t / c_kappa = 50.
    auto f = [&](double y) { return q * std::exp(q * y) * ft_direct(alpha, kappa, t, std::exp(y)); };
    const double y_star = std::log(50.0);
    const double ref = simpson(f, 0.0, y_star, 20000) + simpson(f, y_star, 80.0, 200000);
    const auto r = storage_moment_lower_bound(alpha, kappa, t, q);
    EXPECT_NEAR(r.value, ref, 1e-6 * ref);
    EXPECT_LE(r.error, 1e-6 * r.value);
}

TEST(Storage, MomentLowerBoundInfiniteBeyondTail) {
    EXPECT_TRUE(storage_moment_lower_bound(2.5, 0.0, 10.0, 2.5).infinite);
    // Stationary tail alpha + kappa - 1.
    EXPECT_TRUE(storage_moment_lower_bound(2.5, 0.0, std::numeric_limits<double>::infinity(), 1.5).infinite);
    EXPECT_FALSE(storage_moment_lower_bound(2.5, 0.0, std::numeric_limits<double>::infinity(), 1.4).infinite);
}

TEST(Diffusion, DensityNormalisation) {
    for (double b : {1.0, 2.0, 3.5}) {
        const double rho0 = diffusion_stationary_density(b, 1.0, 0.0).value;
        const double exact = boost::math::tgamma(b) / (std::sqrt(std::numbers::pi) * boost::math::tgamma(b - 0.5));
        EXPECT_NEAR(rho0, exact, 1e-9 * exact) << b;
    }
    const double r = diffusion_stationary_density(2.0, 1.0, 3.0).value;
    EXPECT_NEAR(r, diffusion_stationary_density(2.0, 1.0, 0.0).value * std::pow(10.0, -2.0), 1e-14);
    EXPECT_THROW(diffusion_stationary_density(0.5, 1.0, 0.0), DomainError);
}

TEST(Diffusion, MomentsMatchBetaRatio) {
    for (double p : {0.5, 1.0, 2.0, 2.9}) {
        const double b = 2.0;
        const double exact = boost::math::beta((p + 1) / 2, b - (p + 1) / 2) / boost::math::beta(0.5, b - 0.5);
        const auto r = diffusion_stationary_moment(b, 1.0, p);
        EXPECT_NEAR(r.value, exact, 1e-8 * exact) << p;
    }
    EXPECT_NEAR(diffusion_stationary_moment(2.0, 1.0, 2.0).value, 1.0, 1e-8);
}

TEST(Diffusion, ThresholdAndIllConditioned) {
    EXPECT_TRUE(diffusion_stationary_moment(2.0, 1.0, 3.0).infinite);
    EXPECT_TRUE(diffusion_stationary_moment(2.0, 1.0, 3.2).infinite);
    const auto r = diffusion_stationary_moment(2.0, 1.0, 2.97);
    EXPECT_TRUE(r.ill_conditioned);
    EXPECT_FALSE(r.infinite);
    bool found = false;
    for (const auto& [k, v] : r.to_kv())
        if (k == "value") found = v == "ill-conditioned";
    EXPECT_TRUE(found);
}

TEST(Relaxation, SolvesTheOde) {
    const double beta = 2.0, kappa = 3.0;
    for (double t : {0.01, 1.0, 10.0}) {
        const double h = 1e-6 * t;
        const double x = ode_relaxation(beta, kappa, t).value;
        const double d = (ode_relaxation(beta, kappa, t + h).value - ode_relaxation(beta, kappa, t - h).value) / (2 * h);
        EXPECT_NEAR(d, -beta * std::pow(x, kappa), 1e-6 * std::abs(d));
    }
    EXPECT_TRUE(ode_relaxation(beta, kappa, 0.0).infinite);
    EXPECT_DOUBLE_EQ(relaxation_passage_time(1.0, 3.0, 10.0), 0.005);
    // Passage time inverts the relaxation curve.
    EXPECT_NEAR(ode_relaxation(1.0, 3.0, relaxation_passage_time(1.0, 3.0, 10.0)).value, 10.0, 1e-12);
    EXPECT_THROW(ode_relaxation(1.0, 1.0, 1.0), DomainError);
}

TEST(Upsilon, ClosedFormAgreesWithOdeSolver) {
    for (double y0 : {0.0, 3.0, 100.0})
        for (double t : {0.1, 2.0}) {
            const double closed = upsilon_gamma1_closed_form(5.0, 0.7, y0, t).value;
            EXPECT_NEAR(solve_upsilon(1.0, 5.0, 0.7, y0, t), closed, 1e-9 * std::max(1.0, closed));
        }
    EXPECT_THROW(upsilon_gamma1_closed_form(1.0, 0.0, 1.0, 1.0), DomainError);
}
