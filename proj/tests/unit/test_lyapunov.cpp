#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "lyapsim/errors.hpp"
#include "lyapsim/lyapunov.hpp"
#include "lyapsim/oracles.hpp"

using namespace lyapsim;

namespace {

DissipativityParams params(double p, double kappa, double beta = 1.0) {
    DissipativityParams d;
    d.p = p;
    d.kappa = kappa;
    d.beta = beta;
    return d;
}

ModelSpec linear_drift(double s) {
    ModelSpec m;
    m.name = "linear";
    m.dimension = 1;
    m.drift = [s](double, std::span<const double> x, std::span<double> out) { out[0] = s * x[0]; };
    m.kernel = JumpKernel::none(1);
    return m;
}

}  // namespace

TEST(Profile, QuadraticValues) {
    const auto V = LyapunovProfile::make(2.0, 0.5);
    const std::vector<double> x{3.0, 0.0};
    EXPECT_DOUBLE_EQ(eval_V(V, x), 9.0);
    const Vec g = grad_V(V, x);
    EXPECT_DOUBLE_EQ(g[0], 6.0);
    EXPECT_DOUBLE_EQ(g[1], 0.0);
    const auto H = hess_V(V, x);
    EXPECT_NEAR(H[0], 2.0, 1e-12);
    EXPECT_NEAR(H[3], 2.0, 1e-12);
    EXPECT_NEAR(H[1], 0.0, 1e-12);
}

TEST(Profile, LinearHessianIsTangential) {
    // p = 1 at |x| = 2: radial curvature 0, tangential 1/|x|.
    const auto V = LyapunovProfile::make(1.0, 0.5);
    const auto H = hess_V(V, std::vector{0.0, 2.0});
    EXPECT_NEAR(H[0], 0.5, 1e-12);
    EXPECT_NEAR(H[3], 0.0, 1e-12);
    EXPECT_NEAR(H[1], 0.0, 1e-12);
}

TEST(Profile, MollifierIsTwiceContinuous) {
    for (double p : {0.5, 1.0, 2.0, 3.7, 8.0}) {
        const auto V = LyapunovProfile::make(p, 0.5);
        for (double b : {V.rho, 1.0}) {
            for (int k = 0; k <= 2; ++k) {
                const double lo = V.g(b - 1e-9, k), hi = V.g(b + 1e-9, k);
                EXPECT_NEAR(lo, hi, 1e-6 * std::max(1.0, std::abs(hi))) << p << " " << b << " " << k;
            }
        }
        EXPECT_DOUBLE_EQ(V.g(0.0), V.inner_value());
        EXPECT_DOUBLE_EQ(V.inner_value(), 1.0 / (1.0 + 1.5 * p));
    }
}

TEST(Profile, MonotoneAndCloseToPower) {
    for (double p : {0.5, 1.0, 2.0, 5.0, 8.0}) {
        const auto V = LyapunovProfile::make(p, 0.5);
        double prev = V.g(0.0);
        for (double r = 0.0; r <= 3.0; r += 1e-3) {
            const double v = V.g(r);
            EXPECT_GE(v, prev - 1e-15) << p << " " << r;
            EXPECT_GT(v, 0.0);
            EXPECT_GE(V.g(r, 1), -1e-12);
            EXPECT_LE(std::abs(v - std::pow(r, p)), r >= 1.0 ? 1e-12 * v : 1.0);
            prev = v;
        }
    }
}

TEST(Profile, GradientAndHessianMatchFiniteDifferences) {
    const auto V = LyapunovProfile::make(2.6, 0.5);
    const double h = 1e-6;
    for (const std::vector<double>& x :
         {std::vector{0.3, 0.2, 0.1}, std::vector{0.5, -0.6, 0.2}, std::vector{2.0, 1.0, -3.0}}) {
        const Vec g = grad_V(V, x);
        const auto H = hess_V(V, x);
        for (int i = 0; i < 3; ++i) {
            auto xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            EXPECT_NEAR(g[i], (eval_V(V, xp) - eval_V(V, xm)) / (2 * h), 1e-6 * std::max(1.0, std::abs(g[i])));
            const Vec gp = grad_V(V, xp), gm = grad_V(V, xm);
            for (int j = 0; j < 3; ++j)
                EXPECT_NEAR(H[i * 3 + j], (gp[j] - gm[j]) / (2 * h), 1e-5 * std::max(1.0, std::abs(H[i * 3 + j])));
        }
    }
}

TEST(Profile, RemainderMatchesDirectEvaluation) {
    const auto V = LyapunovProfile::make(2.4, 0.5);
    for (double u : {0.0, 0.2, 0.5, 0.75, 1.0, 1.3, 4.0})
        for (double s : {-0.9, -0.3, -0.05, 0.05, 0.3, 0.9, 3.0}) {
            const double w = u + s;
            if (w < 0.0) continue;
            const double direct = V.g(w) - V.g(u) - V.g(u, 1) * s;
            EXPECT_NEAR(V.remainder(u, s, w), direct, 1e-12 * std::max(1.0, V.g(w))) << u << " " << s;
        }
}

TEST(Profile, RemainderIsSecondOrderForSmallSteps) {
    const auto V = LyapunovProfile::make(2.4, 0.5);
    for (double u : {0.7, 1.3, 5.0})
        for (double s : {1e-4, -1e-5, 1e-7}) {
            const double expected = 0.5 * V.g(u, 2) * s * s + V.g(u, 3) * s * s * s / 6.0;
            EXPECT_NEAR(V.remainder(u, s, u + s), expected, 1e-6 * std::abs(expected)) << u << " " << s;
        }
}

TEST(Generator, DriftTermForPowerDrift) {
    // aD = -p beta R^{p + kappa - 1} outside the unit ball.
    const auto m = make_power_drift(2.0, 0.5, 0.0);
    const auto V = LyapunovProfile::make(3.0, 0.5);
    const auto d = drift_decomposition(m, V, std::vector{4.0});
    EXPECT_NEAR(d.aD, -3.0 * 2.0 * std::pow(4.0, 2.5), 1e-9);
    EXPECT_EQ(d.aM, 0.0);
    EXPECT_EQ(d.aJ, 0.0);
}

TEST(Generator, StorageLargeJumpsAtUnitPower) {
    // V = |x| beyond 1, so aJ is the jump mean alpha/(alpha-1).
    const auto m = make_storage(0.0, 3.0);
    const auto V = LyapunovProfile::make(1.0, 0.5);
    const auto d = drift_decomposition(m, V, std::vector{10.0});
    EXPECT_NEAR(d.aJ, 1.5, 1e-4);
    EXPECT_NEAR(d.aD, -1.0, 1e-12);
}

TEST(Generator, QuadraticProfileReducesToKernelMoments) {
    // For p = 2 away from the mollified core, V(x+z) - V(x) - grad V.z = |z|^2.
    const auto m = make_linear_ou(1.0, 0.5, 2.5, 1.0, 2);
    const auto V = LyapunovProfile::make(2.0, 0.5);
    const std::vector<double> x{3.0, 4.0};
    const auto d = drift_decomposition(m, V, x);
    EXPECT_NEAR(d.aD, -2.0 * 25.0, 1e-9);
    EXPECT_NEAR(d.aM, 2 * 0.25, 1e-12);
    EXPECT_NEAR(d.aJ, m.kernel.large_moment(2.0), 1e-4 * m.kernel.large_moment(2.0));
}

TEST(Generator, SmallJumpTermMatchesSecondMoment) {
    ModelSpec m = linear_drift(-1.0);
    m.kernel.small_model = SmallJumpModel::stable_like;
    m.kernel.small_exponent = 1.2;
    m.kernel.small_coeff = 0.8;
    const auto V = LyapunovProfile::make(2.0, 0.5);
    const auto d = drift_decomposition(m, V, std::vector{5.0});
    EXPECT_NEAR(d.aN, m.kernel.small_moment(2.0), 1e-6 * m.kernel.small_moment(2.0));
}

TEST(Generator, JumpTermsFiniteAcrossMollifierBoundaries) {
    const auto m = make_lorenz84(0.25, 4.0, 1.0, 0.0, 1.5);
    const auto V = LyapunovProfile::make(1.4, 0.5);
    for (double r : {0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.31, 5.34})
        for (const auto& dir : sphere_directions(3, 6, 1)) {
            const std::vector<double> x{r * dir[0], r * dir[1], r * dir[2]};
            const auto d = drift_decomposition(m, V, x);
            EXPECT_TRUE(std::isfinite(d.aV)) << r;
            EXPECT_LE(d.error_aJ, 1e-3 * std::max(1.0, std::abs(d.aJ))) << r;
        }
}

TEST(Certify, ContractingLinearDriftPasses) {
    const auto c = certify_L_condition(linear_drift(-1.0), params(2.0, 1.0), CertificationGrid::standard(1.0, 1), 1.9);
    EXPECT_TRUE(c.pass) << c.reason;
    EXPECT_EQ(c.profile.gamma, 1.0);
    EXPECT_GT(c.profile.C_V, 0.0);
    EXPECT_GE(c.worst_margin, 0.0);
    EXPECT_GT(c.tail_margin, 0.0);
}

TEST(Certify, ExpandingLinearDriftFails) {
    const auto c = certify_L_condition(linear_drift(1.0), params(2.0, 1.0), CertificationGrid::standard(1.0, 1), 1.9);
    EXPECT_FALSE(c.pass);
    EXPECT_FALSE(c.violating_point.empty());
}

TEST(Certify, CriticalDiffusionPresetPasses) {
    const auto m = make_gradient_diffusion(2.0, 1.0);
    const auto d = preset_params(m, 3.0);
    EXPECT_EQ(d.kappa, -1.0);
    const auto c = certify_L_condition(m, d, CertificationGrid::standard(d.r0, 1));
    EXPECT_TRUE(c.pass) << c.reason;
    EXPECT_NEAR(c.profile.c_V, default_c_V(d), 1e-15);
    EXPECT_NEAR(c.profile.c_star, 0.9 * c.profile.c_V, 1e-15);
}

TEST(Certify, DefaultRate) {
    EXPECT_NEAR(default_c_V(params(2.0, 0.0, 3.0)), 5.4, 1e-12);
    auto d = params(3.0, -1.0, 2.0);
    d.c_op = d.c_tr = 1.0;
    EXPECT_NEAR(default_c_V(d), 0.9 * (6.0 - critical_constant(d)), 1e-12);
}

TEST(Flow, HClosedForm) {
    EXPECT_DOUBLE_EQ(flow_H(0.5, 1.0, 0.0, 7.0), 7.0);
    EXPECT_NEAR(flow_H(0.5, 1.0, 2.0, 1.0), 4.0, 1e-12);
    EXPECT_NEAR(flow_Phi_inverse(0.3, flow_Phi(0.3, 5.0)), 5.0, 1e-12);
    EXPECT_THROW(flow_H(1.0, 1.0, 1.0, 1.0), DomainError);
}

TEST(Flow, HSolvesItsOde) {
    // d/dt H = c_* H^gamma.
    for (double gamma : {0.2, 0.5, 0.9})
        for (double t : {0.1, 1.0, 10.0}) {
            const double h = 1e-6 * t;
            const double d = (flow_H(gamma, 0.7, t + h, 2.0) - flow_H(gamma, 0.7, t - h, 2.0)) / (2 * h);
            const double H = flow_H(gamma, 0.7, t, 2.0);
            EXPECT_NEAR(d, 0.7 * std::pow(H, gamma), 1e-6 * d);
        }
}

TEST(Flow, HIsASemigroup) {
    for (double gamma : {0.25, 0.75})
        for (double v : {0.0, 1.0, 30.0}) {
            const double once = flow_H(gamma, 1.3, 2.5, v);
            const double twice = flow_H(gamma, 1.3, 1.0, flow_H(gamma, 1.3, 1.5, v));
            EXPECT_NEAR(once, twice, 1e-12 * once);
        }
}

TEST(Upsilon, EquilibriumIsFixed) {
    // C_V = c_V e^gamma.
    const double gamma = 0.6, c = 2.0, e = 3.0, C = c * std::pow(e, gamma);
    EXPECT_NEAR(solve_upsilon(gamma, C, c, e, 10.0), e, 1e-10);
}

TEST(Upsilon, LinearClosedForm) {
    for (double y0 : {0.0, 1.0, 50.0}) {
        const double exact = 4.0 / 2.0 + (y0 - 2.0) * std::exp(-2.0 * 1.5);
        EXPECT_NEAR(solve_upsilon(1.0, 4.0, 2.0, y0, 1.5), exact, 1e-10 * std::max(1.0, exact));
        EXPECT_NEAR(upsilon_gamma1_closed_form(4.0, 2.0, y0, 1.5).value, exact, 1e-12 * std::max(1.0, exact));
    }
}

TEST(Upsilon, QuadraticClosedForm) {
    // y' = C - c y^2: e tanh(k t + atanh(y0/e)) below e, e coth above.
    const double C = 3.0, c = 0.5, e = std::sqrt(C / c), k = std::sqrt(C * c), t = 0.8;
    const double below = 0.5, above = 10.0;
    EXPECT_NEAR(solve_upsilon(2.0, C, c, below, t), e * std::tanh(k * t + std::atanh(below / e)), 1e-9);
    EXPECT_NEAR(solve_upsilon(2.0, C, c, above, t), e / std::tanh(k * t + std::atanh(e / above)), 1e-9);
}

TEST(Superlinear, TransformGrowsLinearlyAlongRelaxation) {
    // Along x' = -beta x^kappa, U = x^{1-kappa} grows at exactly beta (kappa - 1).
    const double beta = 1.5, kappa = 3.0;
    EXPECT_DOUBLE_EQ(superlinear_growth_rate(beta, kappa), 3.0);
    for (double t : {0.1, 1.0, 4.0}) {
        const double x = ode_relaxation(beta, kappa, t).value;
        EXPECT_NEAR(radial_transform_U(kappa, std::vector{x}), 3.0 * t, 1e-12 * t);
    }
    EXPECT_NEAR(radial_transform_U(3.0, std::vector{2.0}), 0.25, 1e-15);
    EXPECT_THROW(radial_transform_U(1.0, std::vector{2.0}), DomainError);
    EXPECT_THROW(radial_transform_U(2.0, std::vector{0.0}), DomainError);
}

TEST(PassageBounds, ClosedForms) {
    EXPECT_NEAR(passage_tail_bound(0.5, 1.0, 2.0, 1.0), 1.0, 1e-12);
    // Tail bound decays like t^{-1/(1-gamma)}.
    EXPECT_NEAR(passage_tail_bound(0.5, 1.0, 20.0, 1.0), 0.01, 1e-14);
    EXPECT_NEAR(passage_moment_bound(2.0, 0.0, 1.0, 3.0), 4.0 * 9.0, 1e-12);
    EXPECT_THROW(passage_moment_bound(2.0, 1.0, 1.0, 3.0), DomainError);
}
