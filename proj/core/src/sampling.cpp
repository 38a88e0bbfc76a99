#include "lyapsim/sampling.hpp"

#include <cmath>
#include <numbers>

#include "lyapsim/errors.hpp"

namespace lyapsim {

double pareto_from_uniform(double alpha, double u) {
    if (!(alpha > 0.0)) throw DomainError("pareto: alpha must be positive");
    const double r = std::pow(u, -1.0 / alpha);
    return r > 1.0 ? r : std::nextafter(1.0, 2.0);
}

double sample_pareto_magnitude(double alpha, RandomStream& stream) {
    return pareto_from_uniform(alpha, stream.uniform());
}

double sample_normal(RandomStream& stream) {
    // Box-Muller, one variate per pair of uniforms so the draw count per
    // normal is fixed and paths stay aligned across lanes.
    const double u1 = stream.uniform();
    const double u2 = stream.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double sample_exponential(RandomStream& stream) { return -std::log(stream.uniform()); }

std::uint64_t sample_poisson(double mean, RandomStream& stream) {
    if (!(mean >= 0.0)) throw DomainError("poisson: mean must be nonnegative");
    std::uint64_t total = 0;
    // Inversion is exact but costs O(mean); large means are split into chunks.
    constexpr double kChunk = 30.0;
    while (mean > 0.0) {
        const double m = std::min(mean, kChunk);
        mean -= m;
        const double u = stream.uniform();
        double p = std::exp(-m);
        double cdf = p;
        std::uint64_t k = 0;
        while (u > cdf && k < 1000) {
            ++k;
            p *= m / static_cast<double>(k);
            cdf += p;
        }
        total += k;
    }
    return total;
}

double sample_symmetric_stable(double alpha, double scale, RandomStream& stream) {
    if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("stable: alpha must lie in (0,2]");
    if (!(scale > 0.0)) throw DomainError("stable: scale must be positive");
    const double v = std::numbers::pi * (stream.uniform() - 0.5);
    const double w = sample_exponential(stream);
    if (alpha == 1.0) return scale * std::tan(v);
    const double x = std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha) *
                     std::pow(std::cos((1.0 - alpha) * v) / w, (1.0 - alpha) / alpha);
    return scale * x;
}

std::vector<double> sample_jump_times(double rate, double horizon, RandomStream& stream) {
    if (!(horizon >= 0.0)) throw DomainError("jump times: negative horizon");
    std::vector<double> times;
    if (!(rate > 0.0) || horizon == 0.0) return times;
    double t = 0.0;
    for (;;) {
        t += sample_exponential(stream) / rate;
        if (t > horizon) break;
        times.push_back(t);
    }
    return times;
}

Vec sample_direction(const JumpKernel& kernel, RandomStream& stream) {
    const int n = kernel.dimension;
    Vec d(n, 0.0);
    switch (kernel.direction) {
        case DirectionLaw::positive:
            d[0] = 1.0;
            return d;
        case DirectionLaw::axes: {
            const double u = stream.uniform() * 2.0 * n;
            const int k = std::min(static_cast<int>(u), 2 * n - 1);
            d[k / 2] = (k % 2 == 0) ? 1.0 : -1.0;
            return d;
        }
        case DirectionLaw::isotropic:
            break;
    }
    if (n == 1) {
        d[0] = stream.uniform() < 0.5 ? 1.0 : -1.0;
        return d;
    }
    double norm2 = 0.0;
    do {
        norm2 = 0.0;
        for (auto& c : d) {
            c = sample_normal(stream);
            norm2 += c * c;
        }
    } while (norm2 == 0.0);
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& c : d) c *= inv;
    return d;
}

std::vector<JumpEvent> sample_large_jumps(const JumpKernel& kernel, double horizon, RandomStream& stream) {
    std::vector<JumpEvent> events;
    const double rate = kernel.large_rate();
    if (!(rate > 0.0) || horizon <= 0.0) return events;
    double t = 0.0;
    for (;;) {
        t += sample_exponential(stream) / rate;
        if (t > horizon) break;
        const double r = sample_pareto_magnitude(kernel.tail_exponent, stream);
        Vec z = sample_direction(kernel, stream);
        for (auto& c : z) c *= r;
        events.push_back({t, std::move(z), true});
    }
    return events;
}

Vec compensator_correction(const JumpKernel& kernel, double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0)) throw DomainError("compensator: threshold must lie in (0,1]");
    Vec out(kernel.dimension, 0.0);
    // Symmetric laws integrate z to zero on every shell.
    if (kernel.is_symmetric() || kernel.small_model != SmallJumpModel::stable_like) return out;
    out[0] = kernel.small_moment(1.0, threshold, 1.0);
    return out;
}

bool SmallJumpPlan::active() const {
    if (mid_rate > 0.0) return true;
    for (double v : proxy_variance)
        if (v > 0.0) return true;
    return false;
}

SmallJumpPlan make_small_jump_plan(const JumpKernel& kernel, double epsilon) {
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw DomainError("small jumps: epsilon must lie in (0,1]");
    SmallJumpPlan plan;
    plan.epsilon = epsilon;
    const int n = kernel.dimension;
    plan.proxy_variance.assign(n, 0.0);
    plan.compensator_drift.assign(n, 0.0);
    switch (kernel.small_model) {
        case SmallJumpModel::none:
            break;
        case SmallJumpModel::gaussian_proxy:
            plan.proxy_variance.assign(n, kernel.small_variance);
            break;
        case SmallJumpModel::stable_like: {
            // small_moment is a total over axes, so both the isotropic and the axes
            // law spread it evenly over the coordinates.
            const double second = kernel.small_moment(2.0, 0.0, epsilon);
            const double per_coord = kernel.direction == DirectionLaw::positive ? second : second / n;
            plan.proxy_variance.assign(n, per_coord);
            plan.mid_rate = epsilon < 1.0 ? kernel.small_rate(epsilon) : 0.0;
            const Vec c = compensator_correction(kernel, epsilon);
            for (int i = 0; i < n; ++i) plan.compensator_drift[i] = -c[i];
            break;
        }
    }
    return plan;
}

Vec sample_mid_jump(const JumpKernel& kernel, double epsilon, RandomStream& stream) {
    const double a = kernel.small_exponent;
    const double u = stream.uniform();
    double r;
    if (a == 0.0) {
        r = epsilon * std::pow(1.0 / epsilon, u);
    } else {
        // Inverse CDF of the density proportional to r^{-1-a} on (eps, 1].
        const double lo = std::pow(epsilon, -a);
        r = std::pow(lo - u * (lo - 1.0), -1.0 / a);
    }
    Vec z = sample_direction(kernel, stream);
    for (auto& c : z) c *= r;
    return z;
}

}  // namespace lyapsim
