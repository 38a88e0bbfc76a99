#include <cmath>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <gtest/gtest.h>

#include "lyapsim/errors.hpp"
#include "lyapsim/model.hpp"

using namespace lyapsim;

namespace {

DissipativityParams params(double p, double kappa, double beta = 1.0) {
    DissipativityParams d;
    d.p = p;
    d.kappa = kappa;
    d.beta = beta;
    return d;
}

// 1-d model with a(x) = s x and no noise.
ModelSpec linear_drift(double s) {
    ModelSpec m;
    m.name = "linear";
    m.dimension = 1;
    m.drift = [s](double, std::span<const double> x, std::span<double> out) { out[0] = s * x[0]; };
    m.kernel = JumpKernel::none(1);
    return m;
}

}  // namespace

TEST(Balance, Examples) {
    EXPECT_TRUE(check_balance(params(1.5, 0.0)));
    EXPECT_FALSE(check_balance(params(2.0, -1.0)));
    EXPECT_TRUE(check_balance(params(2.5, -1.0)));
}

TEST(Balance, DependsOnlyOnPPlusKappa) {
    for (double p : {0.3, 1.0, 2.2, 5.0})
        for (double kappa : {-1.0, -0.4, 0.0, 0.7, 3.0})
            for (double delta : {-0.25, 0.125, 0.5}) {
                if (kappa - delta < -1.0 || p + delta <= 0.0) continue;
                EXPECT_EQ(check_balance(params(p, kappa)), check_balance(params(p + delta, kappa - delta)))
                    << p << " " << kappa << " " << delta;
            }
}

TEST(Exponents, SublinearExample) {
    const auto r = exponent_report(params(2.0, 0.0));
    EXPECT_TRUE(r.balance_ok);
    EXPECT_EQ(r.gamma, 0.5);
    EXPECT_EQ(r.admissible_pX_sup, 1.0);
    ASSERT_TRUE(r.passage_moment_order);
    EXPECT_EQ(*r.passage_moment_order, 2.0);
    EXPECT_FALSE(r.exp_rate_sup);
    EXPECT_FALSE(r.critical_ok);
}

TEST(Exponents, CriticalExample) {
    auto d = params(3.0, -1.0, 2.0);
    d.c_tr = 1.0;
    d.c_op = 1.0;
    d.c_second = 0.0;
    const auto r = exponent_report(d);
    ASSERT_TRUE(r.critical_ok);
    EXPECT_TRUE(r.critical_ok->first);   // 1 < 4
    EXPECT_TRUE(r.critical_ok->second);  // 3 < 5
    d.p = 5.0;
    EXPECT_FALSE(exponent_report(d).critical_ok->second);
    d.p = 3.0;
    d.c_tr = 4.0;
    EXPECT_FALSE(exponent_report(d).critical_ok->first);
}

TEST(Exponents, LinearLorenzExample) {
    const auto r = exponent_report(params(1.0, 1.0, 0.25));
    EXPECT_EQ(r.gamma, 1.0);
    ASSERT_TRUE(r.exp_rate_sup);
    EXPECT_EQ(*r.exp_rate_sup, 0.25);
    EXPECT_FALSE(r.passage_moment_order);
}

TEST(Exponents, RejectsBalanceViolationAndMissingCriticalConstant) {
    EXPECT_THROW(exponent_report(params(2.0, -1.0)), DomainError);
    EXPECT_THROW(exponent_report(params(3.0, -1.0)), DomainError);
}

TEST(Exponents, ScaleConsistentInBeta) {
    for (double kappa : {-1.0, 0.0, 1.0, 3.0}) {
        auto d = params(3.0, kappa, 1.0);
        d.c_tr = d.c_op = 1.0;
        d.c_second = 0.5;
        auto d2 = d;
        d2.beta *= 2.0;
        const auto a = exponent_report(d), b = exponent_report(d2);
        EXPECT_EQ(a.gamma, b.gamma);
        EXPECT_EQ(a.admissible_pX_sup, b.admissible_pX_sup);
        EXPECT_EQ(a.passage_moment_order, b.passage_moment_order);
        if (kappa == 1.0) {
            EXPECT_EQ(*b.exp_rate_sup, 2.0 * *a.exp_rate_sup);
        }
    }
}

TEST(Kernel, LargeMomentFiniteExactlyBelowAlpha) {
    const auto k = JumpKernel::pareto(1, 2.5, 1.0, DirectionLaw::positive);
    EXPECT_NEAR(k.large_moment(2.0), 5.0, 1e-14);
    EXPECT_NEAR(k.large_moment(2.49), 2.5 / 0.01, 1e-9);
    EXPECT_THROW(k.large_moment(2.5), DivergenceError);
    EXPECT_THROW(k.large_moment(3.0), DivergenceError);
}

TEST(Kernel, SmallSecondMomentFinite) {
    const auto k = JumpKernel::symmetric_stable(3, 1.5, 1.0);
    const double m = k.small_moment(2.0);
    EXPECT_TRUE(std::isfinite(m));
    EXPECT_GT(m, 0.0);
    // small_coeff r^{1-alpha} per axis over (0,1]
    EXPECT_NEAR(m, 3.0 * k.small_coeff / (2.0 - 1.5), 1e-12);
}

TEST(Kernel, TailMassLaw) {
    const auto k = JumpKernel::pareto(1, 2.0, 3.0, DirectionLaw::isotropic);
    EXPECT_DOUBLE_EQ(k.tail_mass(1.0), 3.0);
    EXPECT_DOUBLE_EQ(k.tail_mass(10.0), 0.03);
    EXPECT_DOUBLE_EQ(k.large_rate(), 3.0);
}

TEST(KernelBounds, ParetoSecondMomentAgainstQuadrature) {
    const auto k = JumpKernel::pareto(1, 2.5, 1.0, DirectionLaw::positive);
    const auto cert = verify_kernel_bounds(k, params(2.0, 0.0));
    boost::math::quadrature::exp_sinh<double> rule;
    const double direct = rule.integrate([](double x) { return x * x * 2.5 * std::pow(x, -3.5); }, 1.0,
                                         std::numeric_limits<double>::infinity());
    EXPECT_NEAR(cert.large_integral, 5.0, 5e-6);
    EXPECT_NEAR(direct, 5.0, 1e-8);
    EXPECT_TRUE(cert.pass);
    EXPECT_TRUE(cert.c_large_inferred);
}

TEST(KernelBounds, SuppliedConstantsAreChecked) {
    const auto k = JumpKernel::pareto(1, 2.5, 1.0, DirectionLaw::positive);
    auto d = params(2.0, 0.0);
    d.c_large_p = 4.0;
    EXPECT_FALSE(verify_kernel_bounds(k, d).pass);
    d.c_large_p = 5.0;
    EXPECT_TRUE(verify_kernel_bounds(k, d).pass);
}

TEST(KernelBounds, BoundaryOrderDiverges) {
    const auto k = JumpKernel::pareto(1, 2.0, 1.0, DirectionLaw::positive);
    EXPECT_THROW(verify_kernel_bounds(k, params(2.0, 0.0)), DivergenceError);
}

TEST(KernelBounds, EmptyKernel) {
    const auto cert = verify_kernel_bounds(JumpKernel::none(2), params(2.0, 0.0));
    EXPECT_EQ(cert.small_integral, 0.0);
    EXPECT_EQ(cert.large_integral, 0.0);
    EXPECT_TRUE(cert.pass);
}

TEST(Dissipativity, LorenzPreset) {
    const auto m = make_lorenz84(0.25, 4.0, 1.0, 0.0, 1.5);
    const auto d = preset_params(m, 1.0);
    EXPECT_EQ(d.kappa, 1.0);
    EXPECT_EQ(d.beta, 0.25);
    const std::vector<double> radii = {2.0, 10.0, 100.0};
    const auto cert = verify_dissipativity(m, d, radii, 64);
    EXPECT_TRUE(cert.pass);
    EXPECT_GE(cert.worst_margin, 0.0);
    // -(aX^2 + Y^2 + Z^2) <= -0.25 |x|^2 is tight along the X axis.
    EXPECT_LT(cert.worst_margin, 1e-2 * 100.0 * 100.0);
}

TEST(Dissipativity, StorageHasZeroMargin) {
    // p < 1 checks the truncated drift, which is exactly -x^kappa.
    for (double kappa : {0.5, 0.9}) {
        const auto m = make_storage(kappa, 2.5);
        const auto d = preset_params(m, 0.8);
        const std::vector<double> radii = {1.5, 10.0, 1e3};
        const auto cert = verify_dissipativity(m, d, radii, 2);
        EXPECT_EQ(cert.convention, DriftConvention::truncated);
        EXPECT_TRUE(cert.pass) << kappa;
        EXPECT_NEAR(cert.worst_margin, 0.0, 1e-9 * std::pow(1e3, 1.0 + kappa)) << kappa;
    }
}

TEST(Dissipativity, CompensatedStorageDriftIsNotDissipativeForKappaZero) {
    // For p >= 1 and kappa <= 0 the compensated drift -1 - alpha/(alpha-1)
    // must be checked; its margin alpha/(alpha-1) x is negative at every radius.
    const auto m = make_storage(0.0, 2.5);
    const auto d = preset_params(m, 1.2);
    const std::vector<double> radii = {1.5, 10.0, 1e3};
    const auto cert = verify_dissipativity(m, d, radii, 2);
    EXPECT_EQ(cert.convention, DriftConvention::compensated);
    EXPECT_FALSE(cert.pass);
    EXPECT_NEAR(cert.worst_margin, -2.5 / 1.5 * 1e3, 1e-9);
}

TEST(Dissipativity, AntiDissipativeDriftFailsEverywhere) {
    const auto m = linear_drift(+1.0);
    const std::vector<double> radii = {1.0, 10.0, 100.0};
    const auto cert = verify_dissipativity(m, params(2.0, 1.0), radii, 2);
    EXPECT_FALSE(cert.pass);
    for (double margin : cert.margin_per_radius) EXPECT_LT(margin, 0.0);
}

TEST(Dissipativity, HomogeneousMarginsScale) {
    for (double kappa : {0.0, 1.0, 3.0}) {
        const auto m = make_power_drift(2.0, kappa, 0.0, 1.0, DirectionLaw::isotropic, DriftConvention::truncated,
                                        0.0, 2);
        auto d = preset_params(m, 2.0);
        d.beta = 1.0;
        for (double R : {2.0, 7.0}) {
            const std::vector<double> r1 = {R}, r2 = {10.0 * R};
            const double a = verify_dissipativity(m, d, r1, 16).worst_margin;
            const double b = verify_dissipativity(m, d, r2, 16).worst_margin;
            EXPECT_NEAR(b / a, std::pow(10.0, 1.0 + kappa), 1e-9 * std::pow(10.0, 1.0 + kappa)) << kappa;
        }
    }
}

TEST(Dissipativity, RejectsRadiiInsideR0) {
    const auto m = make_gradient_diffusion(2.0, 1.0);
    const auto d = preset_params(m, 3.0);
    const std::vector<double> radii = {d.r0 / 2.0};
    EXPECT_THROW(verify_dissipativity(m, d, radii, 2), DomainError);
}

TEST(Dissipativity, NonFiniteDriftIsASamplingError) {
    ModelSpec m = linear_drift(-1.0);
    m.drift = [](double, std::span<const double>, std::span<double> out) { out[0] = std::nan(""); };
    const std::vector<double> radii = {2.0};
    EXPECT_THROW(verify_dissipativity(m, params(2.0, 1.0), radii, 2), SamplingError);
}

TEST(Presets, TraceBoundedByDimensionTimesOperatorNorm) {
    const std::vector<ModelSpec> models = {
        make_storage(0.0, 2.5),
        make_lorenz84(0.25, 4.0, 1.0, 0.0, 1.5),
        make_gradient_diffusion(2.0, 1.0),
        make_linear_ou(1.0, 0.5, 2.5, 1.0, 3),
        make_power_drift(1.0, 3.0, 2.5, 1.0, DirectionLaw::isotropic, DriftConvention::truncated, 0.3, 2),
    };
    for (const auto& m : models) {
        const auto d = preset_params(m, 1.2);
        EXPECT_LE(d.c_tr, m.dimension * d.c_op * (1.0 + 1e-12)) << m.name;
        EXPECT_GE(d.c_op, 0.0);
    }
}

TEST(Presets, CovarianceSymmetricPositiveSemidefinite) {
    const auto m = make_linear_ou(1.0, 0.7, 0.0, 1.0, 3);
    const auto dirs = sphere_directions(3, 10);
    std::vector<double> b(9);
    for (const auto& x : dirs) {
        m.covariance(0.0, x, b);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(b[i * 3 + j], b[j * 3 + i]);
        for (const auto& v : dirs) {
            double q = 0.0;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) q += v[i] * b[i * 3 + j] * v[j];
            EXPECT_GE(q, -1e-14);
        }
    }
}

TEST(Presets, DriftFiniteOnBoundedSets) {
    const auto m = make_lorenz84(0.25, 4.0, 1.0, 0.0, 1.5);
    std::vector<double> a(3);
    for (double r : {0.0, 0.5, 1.0, 5.0})
        for (const auto& d : sphere_directions(3, 32)) {
            const std::vector<double> x = {r * d[0], r * d[1], r * d[2]};
            m.drift(0.0, x, a);
            for (double v : a) EXPECT_TRUE(std::isfinite(v));
        }
}

TEST(Conventions, CompensatedDriftDiffersByLargeJumpMean) {
    // One-sided Pareto(alpha) jumps: A^inf = A^{<=1} - int_{|z|>1} z K(dz).
    const auto m = make_storage(0.0, 2.5);
    const std::vector<double> x = {3.0};
    std::vector<double> t(1), c(1);
    m.drift_in(DriftConvention::truncated, 0.0, x, t);
    m.drift_in(DriftConvention::compensated, 0.0, x, c);
    EXPECT_NEAR(t[0] - c[0], -2.5 / 1.5, 1e-14);
}

TEST(Conventions, CertificationRule) {
    const auto m = make_power_drift(1.0, 2.0, 2.5);
    EXPECT_EQ(certification_convention(m, params(0.5, 2.0)), DriftConvention::truncated);
    EXPECT_EQ(certification_convention(m, params(1.5, 0.0)), DriftConvention::compensated);
    EXPECT_EQ(certification_convention(m, params(1.5, -0.5)), DriftConvention::compensated);
    EXPECT_EQ(certification_convention(m, params(1.5, 2.0)), m.convention);
}

TEST(Sphere, DirectionsAreUnitAndDeterministic) {
    for (int n : {1, 2, 3, 5}) {
        const auto a = sphere_directions(n, 20, 7), b = sphere_directions(n, 20, 7);
        EXPECT_EQ(a, b);
        for (const auto& d : a) {
            double s = 0.0;
            for (double v : d) s += v * v;
            EXPECT_NEAR(s, 1.0, 1e-12);
        }
    }
    EXPECT_EQ(sphere_directions(1, 2).size(), 2u);
}

TEST(Params, ValidateRejectsNonPositiveConstants) {
    auto d = params(2.0, 0.0, 0.0);
    EXPECT_THROW(d.validate(1), DomainError);
    d = params(2.0, -1.5);
    EXPECT_THROW(d.validate(1), DomainError);
    d = params(2.0, 0.0);
    d.c_op = 1.0;
    d.c_tr = 3.0;
    EXPECT_THROW(d.validate(2), DomainError);
    EXPECT_NO_THROW(d.validate(3));
}
