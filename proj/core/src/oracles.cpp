#include "lyapsim/oracles.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "lyapsim/errors.hpp"
#include "lyapsim/quadrature.hpp"

namespace lyapsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

QuadratureOptions oracle_tolerance() {
    QuadratureOptions o;
    o.rel_tol = 1e-8;
    o.abs_tol = 1e-15;
    return o;
}

OracleResult make(Formula f, double value, KeyValues inputs) {
    OracleResult r;
    r.formula = f;
    r.value = value;
    r.inputs = std::move(inputs);
    r.infinite = std::isinf(value);
    return r;
}

// int_0^inf x^p (1+x^2)^{-b} dx = int_0^{pi/2} sin^p cos^{2b-2-p} d theta (x = tan theta).
// The upper half is folded onto [0, pi/4] so the singular endpoint sits at 0,
// where the abscissae keep full relative precision.
QuadratureResult half_line_power(double p, double b) {
    const double e = 2.0 * b - 2.0 - p;
    const double quarter = std::numbers::pi / 4.0;
    const auto lower = integrate_endpoint_singular(
        [=](double th) { return std::pow(std::sin(th), p) * std::pow(std::cos(th), e); }, 0.0, quarter,
        oracle_tolerance());
    const auto upper = integrate_endpoint_singular(
        [=](double ph) { return std::pow(std::cos(ph), p) * std::pow(std::sin(ph), e); }, 0.0, quarter,
        oracle_tolerance());
    QuadratureResult r;
    r.value = lower.value + upper.value;
    r.error = lower.error + upper.error;
    r.converged = lower.converged && upper.converged;
    return r;
}

}  // namespace

std::string to_string(Formula formula) {
    switch (formula) {
        case Formula::f_t: return "f_t";
        case Formula::f_inf: return "f_inf";
        case Formula::c_kappa: return "c_kappa";
        case Formula::rho: return "rho";
        case Formula::rho_moment: return "rho_moment";
        case Formula::moment_lower_bound: return "moment_lower_bound";
        case Formula::ode_relax: return "ode_relax";
        case Formula::upsilon_gamma1: return "upsilon_gamma1";
    }
    return "?";
}

KeyValues OracleResult::to_kv() const {
    KeyValues kv = {{"formula", to_string(formula)}};
    append_kv(kv, "input", inputs);
    kv.emplace_back("value", ill_conditioned ? "ill-conditioned" : format_number(value));
    kv.emplace_back("infinite", format_bool(infinite));
    kv.emplace_back("error", format_number(error));
    return kv;
}

double storage_c_kappa(double kappa) {
    if (!(kappa >= -1.0 && kappa < 1.0)) throw DomainError("c_kappa needs kappa in [-1, 1)");
    return (std::pow(2.0, 1.0 - kappa) - 1.0) / (1.0 - kappa);
}

OracleResult storage_tail_lower_bound(double alpha, double kappa, double t, double R) {
    if (!(R > 1.0)) throw DomainError("f_t(R) needs R > 1");
    if (!(alpha > 0.0 && t >= 0.0)) throw DomainError("f_t(R) needs alpha > 0, t >= 0");
    const double horizon = std::min(storage_c_kappa(kappa) * std::pow(R, 1.0 - kappa), t);
    return make(Formula::f_t, -std::expm1(-horizon * std::pow(2.0 * R, -alpha)),
                {{"alpha", format_number(alpha)},
                 {"kappa", format_number(kappa)},
                 {"t", format_number(t)},
                 {"R", format_number(R)}});
}

OracleResult storage_tail_lower_bound_limit(double alpha, double kappa, double R) {
    if (!(R > 1.0)) throw DomainError("f_inf(R) needs R > 1");
    const double v = -std::expm1(-std::pow(2.0, -alpha) * storage_c_kappa(kappa) * std::pow(R, 1.0 - alpha - kappa));
    return make(Formula::f_inf, v,
                {{"alpha", format_number(alpha)}, {"kappa", format_number(kappa)}, {"R", format_number(R)}});
}

OracleResult storage_moment_lower_bound(double alpha, double kappa, double t, double q) {
    if (!(q > 0.0)) throw DomainError("moment order must be positive");
    KeyValues in = {{"alpha", format_number(alpha)},
                    {"kappa", format_number(kappa)},
                    {"t", format_number(t)},
                    {"q", format_number(q)}};
    // f_t(R) ~ min(c R^{1-kappa}, t) (2R)^{-alpha} for large R.
    const double tail_exponent = std::isinf(t) ? alpha + kappa - 1.0 : alpha;
    if (q >= tail_exponent) return make(Formula::moment_lower_bound, kInf, in);
    const double c = storage_c_kappa(kappa);
    auto f = [&](double R) { return q * std::pow(R, q - 1.0) * storage_tail_lower_bound(alpha, kappa, t, R).value; };
    // The min() switches branch at R_* = (t/c)^{1/(1-kappa)}.
    const double r_star = std::isinf(t) ? 1.0 : std::max(1.0 + 1e-12, std::pow(t / c, 1.0 / (1.0 - kappa)));
    QuadratureResult head;
    if (r_star > 1.0 + 1e-12) head = integrate_smooth(f, std::nextafter(1.0, 2.0), r_star, oracle_tolerance());
    const auto tail = integrate_to_infinity(f, std::max(r_star, std::nextafter(1.0, 2.0)), oracle_tolerance());
    auto r = make(Formula::moment_lower_bound, head.value + tail.value, in);
    r.error = head.error + tail.error;
    return r;
}

OracleResult diffusion_stationary_density(double beta, double sigma2, double x) {
    if (!(sigma2 > 0.0 && 2.0 * beta > sigma2)) throw DomainError("stationary density is not normalizable: need 2 beta > sigma^2");
    const double b = beta / sigma2;
    const auto z = half_line_power(0.0, b);
    auto r = make(Formula::rho, std::pow(1.0 + x * x, -b) / (2.0 * z.value),
                  {{"beta", format_number(beta)}, {"sigma2", format_number(sigma2)}, {"x", format_number(x)}});
    r.error = r.value * z.error / z.value;
    return r;
}

OracleResult diffusion_stationary_moment(double beta, double sigma2, double p) {
    if (!(sigma2 > 0.0 && 2.0 * beta > sigma2)) throw DomainError("stationary density is not normalizable: need 2 beta > sigma^2");
    if (!(p >= 0.0)) throw DomainError("moment order must be nonnegative");
    KeyValues in = {{"beta", format_number(beta)}, {"sigma2", format_number(sigma2)}, {"p", format_number(p)}};
    const double b = beta / sigma2;
    const double threshold = 2.0 * b - 1.0;
    if (p >= threshold) return make(Formula::rho_moment, kInf, in);
    if (threshold - p < 0.05) {
        auto r = make(Formula::rho_moment, std::numeric_limits<double>::quiet_NaN(), in);
        r.ill_conditioned = true;
        return r;
    }
    const auto num = half_line_power(p, b);
    const auto den = half_line_power(0.0, b);
    auto r = make(Formula::rho_moment, num.value / den.value, in);
    r.error = r.value * (num.error / num.value + den.error / den.value);
    return r;
}

OracleResult ode_relaxation(double beta, double kappa, double t) {
    if (!(kappa > 1.0 && beta > 0.0)) throw DomainError("relaxation needs kappa > 1, beta > 0");
    if (!(t >= 0.0)) throw DomainError("relaxation needs t >= 0");
    const double v = t == 0.0 ? kInf : std::pow(beta * (kappa - 1.0) * t, -1.0 / (kappa - 1.0));
    return make(Formula::ode_relax, v,
                {{"beta", format_number(beta)}, {"kappa", format_number(kappa)}, {"t", format_number(t)}});
}

double relaxation_passage_time(double beta, double kappa, double R) {
    if (!(kappa > 1.0 && beta > 0.0 && R > 0.0)) throw DomainError("passage time needs kappa > 1, beta, R > 0");
    return std::pow(R, 1.0 - kappa) / (beta * (kappa - 1.0));
}

OracleResult upsilon_gamma1_closed_form(double C_V, double c_V, double upsilon0, double t) {
    if (!(t >= 0.0)) throw DomainError("upsilon needs t >= 0");
    if (!(c_V > 0.0)) throw DomainError("upsilon needs c_V > 0");
    const double eq = C_V / c_V;
    return make(Formula::upsilon_gamma1, eq + (upsilon0 - eq) * std::exp(-c_V * t),
                {{"C_V", format_number(C_V)},
                 {"c_V", format_number(c_V)},
                 {"upsilon0", format_number(upsilon0)},
                 {"t", format_number(t)}});
}

}  // namespace lyapsim
