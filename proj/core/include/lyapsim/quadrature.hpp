#pragma once

#include <functional>

namespace lyapsim {

struct QuadratureOptions {
    double rel_tol = 1e-6;
    double abs_tol = 1e-13;
    int max_depth = 15;
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    bool converged = true;
};

using Integrand = std::function<double(double)>;

/// Double-exponential rule on (a,b); tolerates integrable endpoint singularities.
QuadratureResult integrate_endpoint_singular(const Integrand& f, double a, double b,
                                             const QuadratureOptions& options = {});
/// Adaptive Gauss-Kronrod (15-point) on [a,b] for smooth integrands.
QuadratureResult integrate_smooth(const Integrand& f, double a, double b,
                                  const QuadratureOptions& options = {});
/// int_a^inf f; f must decay at least algebraically.
QuadratureResult integrate_to_infinity(const Integrand& f, double a,
                                       const QuadratureOptions& options = {});

}  // namespace lyapsim
