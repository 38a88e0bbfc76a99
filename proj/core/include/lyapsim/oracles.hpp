#pragma once

#include <string>

#include "lyapsim/io.hpp"

namespace lyapsim {

enum class Formula { f_t, f_inf, c_kappa, rho, rho_moment, moment_lower_bound, ode_relax, upsilon_gamma1 };
std::string to_string(Formula formula);

struct OracleResult {
    double value = 0.0;
    Formula formula = Formula::f_t;
    KeyValues inputs;
    bool infinite = false;
    bool ill_conditioned = false;
    double error = 0.0;  ///< quadrature error bound, 0 for closed forms

    KeyValues to_kv() const;
};

/// c_kappa = (2^{1-kappa} - 1)/(1 - kappa), kappa in [-1, 1).
double storage_c_kappa(double kappa);
/// f_t(R) = 1 - exp(-min(c_kappa R^{1-kappa}, t) (2R)^{-alpha}); t = inf gives f_inf.
OracleResult storage_tail_lower_bound(double alpha, double kappa, double t, double R);
/// f_inf(R) = 1 - exp(-2^{-alpha} c_kappa R^{1-alpha-kappa}).
OracleResult storage_tail_lower_bound_limit(double alpha, double kappa, double R);
/// q int_1^inf R^{q-1} f_t(R) dR, a lower bound on E X_t^q of the storage system.
OracleResult storage_moment_lower_bound(double alpha, double kappa, double t, double q);

/// rho(x) = c (1+x^2)^{-beta/sigma^2}, c by quadrature.
OracleResult diffusion_stationary_density(double beta, double sigma2, double x);
/// int |x|^p rho(x) dx; infinite iff p >= 2 beta/sigma^2 - 1; ill-conditioned
/// (value not reported) within 0.05 of that threshold.
OracleResult diffusion_stationary_moment(double beta, double sigma2, double p);

/// x_t = (beta (kappa-1) t)^{-1/(kappa-1)}: relaxation from infinity; infinite at t = 0.
OracleResult ode_relaxation(double beta, double kappa, double t);
/// t_R = R^{1-kappa} / (beta (kappa - 1)).
double relaxation_passage_time(double beta, double kappa, double R);

OracleResult upsilon_gamma1_closed_form(double C_V, double c_V, double upsilon0, double t);

}  // namespace lyapsim
