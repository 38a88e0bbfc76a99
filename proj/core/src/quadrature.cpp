#include "lyapsim/quadrature.hpp"

#include <cmath>
#include <limits>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace lyapsim {

namespace {

bool within(const QuadratureResult& r, const QuadratureOptions& o) {
    return std::isfinite(r.value) && r.error <= std::max(o.abs_tol, o.rel_tol * std::abs(r.value));
}

// Non-finite samples at the extreme abscissae of the double-exponential rules
// come from overflow, not from the integrand's mass; treat them as zero.
double guarded(const Integrand& f, double x) {
    const double v = f(x);
    return std::isfinite(v) ? v : 0.0;
}

// The double-exponential rules stop once the level difference drops below the
// requested tolerance, so their estimate lands right at it; ask for a margin.
double rule_tolerance(const QuadratureOptions& o) { return std::min(0.1 * o.rel_tol, 1e-3); }

}  // namespace

QuadratureResult integrate_endpoint_singular(const Integrand& f, double a, double b,
                                             const QuadratureOptions& options) {
    QuadratureResult r;
    if (a == b) return r;
    boost::math::quadrature::tanh_sinh<double> rule(options.max_depth);
    double l1 = 0.0;
    r.value = rule.integrate([&](double x) { return guarded(f, x); }, a, b,
                             rule_tolerance(options), &r.error, &l1);
    r.converged = within(r, options);
    return r;
}

QuadratureResult integrate_smooth(const Integrand& f, double a, double b,
                                  const QuadratureOptions& options) {
    QuadratureResult r;
    if (a == b) return r;
    double l1 = 0.0;
    r.value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        [&](double x) { return f(x); }, a, b, static_cast<unsigned>(options.max_depth),
        options.rel_tol, &r.error, &l1);
    r.converged = within(r, options);
    return r;
}

QuadratureResult integrate_to_infinity(const Integrand& f, double a, const QuadratureOptions& options) {
    QuadratureResult r;
    boost::math::quadrature::exp_sinh<double> rule(options.max_depth);
    double l1 = 0.0;
    r.value = rule.integrate([&](double x) { return guarded(f, x); }, a,
                             std::numeric_limits<double>::infinity(), rule_tolerance(options),
                             &r.error, &l1);
    r.converged = within(r, options);
    return r;
}

}  // namespace lyapsim
