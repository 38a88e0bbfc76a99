#pragma once

#include <span>
#include <string>
#include <vector>

#include "lyapsim/model.hpp"

namespace lyapsim {

/// Mollified Lyapunov function V(x) = g(|x|):
///   g = v0 on [0, rho], quintic Hermite blend on [rho, 1], |x|^p on [1, inf),
/// with v0 = 1/(1 + 1.5 p), which keeps g monotone for p <= 8. Constants are
/// filled in by certify_L_condition.
struct LyapunovProfile {
    double p = 2.0;
    double rho = 0.5;
    double gamma = 1.0;
    double C_V = 0.0;
    double c_V = 0.0;
    double V_star = 1.0;
    double c_star = 0.0;

    static LyapunovProfile make(double p, double gamma, double rho = 0.5);

    double inner_value() const;
    std::string mollifier_id() const;

    /// k-th derivative of g at radius r, k in 0..3.
    double g(double r, int k = 0) const;
    /// g(u+s) - g(u) - g'(u) s with u + s = w >= 0, free of cancellation for small s.
    double remainder(double u, double s, double w) const;

    KeyValues to_kv() const;
};

double eval_V(const LyapunovProfile& profile, std::span<const double> x);
Vec grad_V(const LyapunovProfile& profile, std::span<const double> x);
/// Row-major n x n Hessian.
std::vector<double> hess_V(const LyapunovProfile& profile, std::span<const double> x);

struct DriftDecomposition {
    double aD = 0.0;
    double aM = 0.0;
    double aN = 0.0;
    double aJ = 0.0;
    double aV = 0.0;
    double error_aN = 0.0;
    double error_aJ = 0.0;
};

/// aD = grad V . a, aM = tr(hess V B)/2, aN/aJ the small/large jump integrals.
/// The large-jump term is compensated iff the model declares a compensated drift.
/// Throws QuadratureError (with the partial estimate) when a term misses tolerance.
DriftDecomposition drift_decomposition(const ModelSpec& model, const LyapunovProfile& profile,
                                       std::span<const double> x, const QuadratureOptions& quadrature = {});

struct CertificationGrid {
    std::vector<double> radii;
    int directions = 2;
    std::uint64_t seed = 0;

    /// 8 radii on [0, R0) plus 12 geometric radii from R0 to 1e4 R0.
    static CertificationGrid standard(double r0, int dimension);
};

struct LyapunovCertificate {
    bool pass = false;
    std::string reason;
    LyapunovProfile profile;
    double worst_margin = 0.0;  ///< min over grid of C_V - c_V V^gamma - aV
    double tail_margin = 0.0;   ///< C_V - max h on the outermost shell
    double R_star = 0.0;
    Vec argmax_point;           ///< where aV + c_V V^gamma peaks
    Vec violating_point;        ///< set on failure
    std::vector<double> radii;
    std::vector<double> shell_max_h;  ///< max over directions of aV + c_V V^gamma
    int directions = 0;
    double rel_tol = 0.0;

    KeyValues to_kv() const;
};

/// Default rate: 0.9 p beta, or 0.9 (p beta - C_*(1,0)) when kappa = -1.
double default_c_V(const DissipativityParams& params);

/// Fits the smallest C_V with aV <= C_V - c_V V^gamma on the grid. c_V <= 0 selects
/// default_c_V. Fails when the supremum is not attained inside the grid.
LyapunovCertificate certify_L_condition(const ModelSpec& model, const DissipativityParams& params,
                                        const CertificationGrid& grid, double c_V = 0.0,
                                        const QuadratureOptions& quadrature = {});

/// Phi(v) = int_1^v w^{-gamma} dw and its inverse, gamma in (0,1).
double flow_Phi(double gamma, double v);
double flow_Phi_inverse(double gamma, double y);
/// H(t,v) = ((1-gamma) c_* t + v^{1-gamma})^{1/(1-gamma)}.
double flow_H(double gamma, double c_star, double t, double v);

/// Upsilon' = C_V - c_V Upsilon^gamma, Upsilon(0) = upsilon0, by adaptive Dormand-Prince.
double solve_upsilon(double gamma, double C_V, double c_V, double upsilon0, double t);

/// U(x) = |x|^{1-kappa} for kappa > 1.
double radial_transform_U(double kappa, std::span<const double> x);
/// Lower bound beta (kappa - 1) on the growth rate of U along the flow.
double superlinear_growth_rate(double beta, double kappa);

/// ((1-gamma) c_*)^{-1/(1-gamma)} t^{-1/(1-gamma)} V_sigma.
double passage_tail_bound(double gamma, double c_star, double t, double V_sigma);
/// ((1-kappa) c_* / p)^{-p/(1-kappa)} |x0|^p.
double passage_moment_bound(double p, double kappa, double c_star, double x0_norm);

}  // namespace lyapsim
