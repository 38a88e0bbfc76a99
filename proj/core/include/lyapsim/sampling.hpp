#pragma once

#include <cstdint>
#include <vector>

#include "lyapsim/model.hpp"
#include "lyapsim/random.hpp"

namespace lyapsim {

struct JumpEvent {
    double time = 0.0;
    Vec size;
    bool large = true;  ///< |size| > 1
};

/// Inverse transform u^{-1/alpha}, pushed off the support boundary 1.
double pareto_from_uniform(double alpha, double u);
/// r > 1 with P(r > x) = x^{-alpha}.
double sample_pareto_magnitude(double alpha, RandomStream& stream);
double sample_normal(RandomStream& stream);
double sample_exponential(RandomStream& stream);
std::uint64_t sample_poisson(double mean, RandomStream& stream);
/// Chambers-Mallows-Stuck; characteristic function exp(-scale^alpha |theta|^alpha).
double sample_symmetric_stable(double alpha, double scale, RandomStream& stream);

/// Ordered Poisson arrival times on [0, horizon].
std::vector<double> sample_jump_times(double rate, double horizon, RandomStream& stream);

/// Unit direction of a jump under the kernel's direction law.
Vec sample_direction(const JumpKernel& kernel, RandomStream& stream);
/// All jumps with |z| > 1 on [0, horizon]. Per event the draws are, in order:
/// inter-arrival time, magnitude, direction. The exact storage simulator and the
/// Euler scheme consume a lane-1 stream in this same order, so they share jumps.
std::vector<JumpEvent> sample_large_jumps(const JumpKernel& kernel, double horizon, RandomStream& stream);

/// int_{threshold<|z|<=1} z K(dz).
Vec compensator_correction(const JumpKernel& kernel, double threshold);

/// Truncate-at-epsilon treatment of the compensated small jumps: a Gaussian proxy
/// with covariance int_{|z|<=eps} z z^T K(dz), compound-Poisson jumps on
/// (eps, 1], and the drift that compensates the latter.
struct SmallJumpPlan {
    double epsilon = 0.01;
    std::vector<double> proxy_variance;  ///< diagonal of the proxy covariance (per coordinate)
    double mid_rate = 0.0;               ///< rate of jumps with eps < |z| <= 1
    Vec compensator_drift;               ///< -int_{eps<|z|<=1} z K(dz)
    bool active() const;
};

SmallJumpPlan make_small_jump_plan(const JumpKernel& kernel, double epsilon);
/// One jump conditioned on eps < |z| <= 1.
Vec sample_mid_jump(const JumpKernel& kernel, double epsilon, RandomStream& stream);

}  // namespace lyapsim
