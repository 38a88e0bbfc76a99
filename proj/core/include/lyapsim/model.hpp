#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lyapsim/io.hpp"
#include "lyapsim/quadrature.hpp"

namespace lyapsim {

using Vec = std::vector<double>;

enum class SmallJumpModel { none, stable_like, gaussian_proxy };

/// How jump directions are distributed on the unit sphere.
///  - isotropic: uniform on S^{n-1} (in one dimension, a fair sign);
///  - positive: one-dimensional, positive jumps only (storage systems);
///  - axes: independent one-dimensional symmetric kernels on each coordinate.
enum class DirectionLaw { isotropic, positive, axes };

/// Levy kernel K(dz) with a Pareto-type large-jump part,
///   K(|z| > x) = large_mass * x^{-alpha},  x >= 1,
/// and an optional small-jump part on {|z| <= 1}. For DirectionLaw::axes the
/// masses and coefficients are per coordinate.
struct JumpKernel {
    int dimension = 1;
    double tail_exponent = 0.0;
    double large_mass = 0.0;
    SmallJumpModel small_model = SmallJumpModel::none;
    /// stable_like: radial density small_coeff * r^{-1-small_exponent} on (0,1].
    double small_exponent = 0.0;
    double small_coeff = 0.0;
    /// gaussian_proxy: covariance rate small_variance * I.
    double small_variance = 0.0;
    DirectionLaw direction = DirectionLaw::isotropic;

    static JumpKernel none(int dimension);
    static JumpKernel pareto(int dimension, double alpha, double mass, DirectionLaw direction);
    /// Symmetric alpha-stable Levy measure with characteristic exponent scale^alpha |theta|^alpha,
    /// independent on each of `dimension` coordinates.
    static JumpKernel symmetric_stable(int dimension, double alpha, double scale);

    bool has_large_jumps() const { return large_mass > 0.0 && tail_exponent > 0.0; }
    bool has_small_jumps() const;
    bool is_symmetric() const { return direction != DirectionLaw::positive; }
    int axis_count() const { return direction == DirectionLaw::axes ? dimension : 1; }

    /// Total rate of jumps with |z| > 1.
    double large_rate() const;
    /// K(|z| > x) for x >= 1 (total over axes).
    double tail_mass(double x) const;
    /// Closed form of int_{|z|>1} |z|^q K(dz); throws DivergenceError for q >= alpha.
    double large_moment(double q) const;
    /// Closed form of int_{lo<|z|<=hi} |z|^q K(dz) for 0 <= lo < hi <= 1.
    double small_moment(double q, double lo = 0.0, double hi = 1.0) const;
    /// Rate of jumps with lo < |z| <= 1 (stable_like only; zero otherwise).
    double small_rate(double lo) const;
    /// int_{|z|>1} z K(dz); infinite entries when alpha <= 1 and the kernel is one-sided.
    Vec large_mean() const;

    void validate() const;
};

/// Drift a(t,x) written into `out` (size n).
using DriftField = std::function<void(double t, std::span<const double> x, std::span<double> out)>;
/// Diffusion factor sigma(t,x) written row-major into `out` (n x m).
using DiffusionField = std::function<void(double t, std::span<const double> x, std::span<double> out)>;

/// Which compensation the supplied drift field assumes:
///  truncated   - A^{<=1}: jumps with |z| > 1 are not compensated;
///  compensated - A^{inf}: all jumps compensated (needs a finite first moment).
enum class DriftConvention { truncated, compensated };

enum class Preset { generic, storage, lorenz84, gradient_diffusion, linear_ou, power_drift };

std::string to_string(Preset preset);
std::string to_string(DriftConvention convention);

struct ModelSpec {
    std::string name;
    Preset preset = Preset::generic;
    std::map<std::string, double> preset_values;
    int dimension = 1;
    int noise_dimension = 0;
    DriftField drift;
    DriftConvention convention = DriftConvention::truncated;
    DiffusionField diffusion;
    JumpKernel kernel;
    /// Storage systems live on [0, inf); the Euler scheme clamps at 0.
    bool nonnegative = false;

    /// Drift written in the requested convention (converted through the kernel).
    void drift_in(DriftConvention target, double t, std::span<const double> x,
                  std::span<double> out) const;
    /// B = sigma sigma^T (n x n, row-major); zero without diffusion.
    void covariance(double t, std::span<const double> x, std::span<double> out) const;
    double value(const std::string& key) const;

    void validate() const;
};

/// r(x) of the storage system: x^kappa above 1, x on (-inf, 1].
double storage_rate(double kappa, double x);

ModelSpec make_storage(double kappa, double alpha,
                       DriftConvention convention = DriftConvention::truncated);
ModelSpec make_lorenz84(double a, double b, double c, double gamma, double alpha,
                        double r0 = 1.0, double noise_scale = 1.0);
ModelSpec make_gradient_diffusion(double beta, double sigma);
/// dX = -beta X dt + sigma dW + symmetric Pareto(alpha) jumps of rate jump_mass
/// (no jumps when alpha <= 0).
ModelSpec make_linear_ou(double beta, double sigma, double alpha, double jump_mass = 1.0,
                         int dimension = 1);
/// a(x) = -beta |x|^{kappa-1} x for |x| >= 1, -beta x inside; Pareto(alpha) jumps.
ModelSpec make_power_drift(double beta, double kappa, double alpha, double jump_mass = 1.0,
                           DirectionLaw direction = DirectionLaw::isotropic,
                           DriftConvention convention = DriftConvention::truncated,
                           double sigma = 0.0, int dimension = 1);

/// (p, kappa, beta, R_0) and the bounding constants of the standing assumptions.
struct DissipativityParams {
    double p = 0.0;
    double kappa = 0.0;
    double beta = 0.0;
    double r0 = 1.0;
    double c_op = 0.0;       ///< bound on |B_t|
    double c_tr = 0.0;       ///< bound on Trace B_t
    double c_small = 0.0;    ///< bound on int_{|z|<=1} |z|^2 K_t(dz)
    double c_large_p = 0.0;  ///< bound on int_{|z|>1} |z|^p K_t(dz)
    std::optional<double> c_second;  ///< bound on int |z|^2 K_t(dz)

    void validate(int dimension) const;
    KeyValues to_kv() const;
};

/// Constants for `model` at tail order p: kappa, beta, R_0 from the preset's
/// dissipativity bound, c_op/c_tr sampled from sigma, kernel constants in closed form.
DissipativityParams preset_params(const ModelSpec& model, double p);

struct ExponentReport {
    bool balance_ok = false;
    double gamma = 0.0;
    double admissible_pX_sup = 0.0;
    std::optional<double> passage_moment_order;
    std::optional<double> exp_rate_sup;
    std::optional<std::pair<bool, bool>> critical_ok;
    std::vector<std::string> applicable_theorems;

    KeyValues to_kv() const;
};

bool check_balance(const DissipativityParams& params);
ExponentReport exponent_report(const DissipativityParams& params);
/// p/2 (c_tr + (p-2) c_op + (p-1) c_second): the constant competing with p*beta
/// in the critical case kappa = -1.
double critical_constant(const DissipativityParams& params);

/// Drift convention the dissipativity assumption must be checked in:
/// truncated for p < 1, compensated for p >= 1 and kappa <= 0, either (the
/// declared one) for p >= 1 and kappa > 0.
DriftConvention certification_convention(const ModelSpec& model, const DissipativityParams& params);

/// Low-discrepancy directions on S^{n-1}: +-1 for n=1, uniform angles for n=2,
/// a Fibonacci lattice for n=3, seeded uniform directions for n>3.
std::vector<Vec> sphere_directions(int dimension, int count, std::uint64_t seed = 0);

struct DissipativityCertificate {
    bool pass = false;
    DriftConvention convention = DriftConvention::truncated;
    double worst_margin = 0.0;  ///< min over samples of -beta|x|^{1+kappa} - a(x).x
    Vec worst_point;
    double worst_radius = 0.0;
    std::vector<double> radii;
    std::vector<double> margin_per_radius;  ///< worst margin on each radius
    int directions = 0;
    std::uint64_t seed = 0;

    KeyValues to_kv() const;
};

DissipativityCertificate verify_dissipativity(const ModelSpec& model, const DissipativityParams& params,
                                              std::span<const double> radii, int directions_per_radius,
                                              std::uint64_t seed = 0);

struct KernelCertificate {
    bool pass = false;
    double small_integral = 0.0;
    double small_error = 0.0;
    double large_integral = 0.0;
    double large_error = 0.0;
    double c_small = 0.0;
    double c_large_p = 0.0;
    bool c_small_inferred = false;
    bool c_large_inferred = false;

    KeyValues to_kv() const;
};

/// Integrates |z|^2 over {|z|<=1} and |z|^p over {|z|>1} numerically. Constants
/// that are not supplied (<= 0) are inferred from the quadrature.
KernelCertificate verify_kernel_bounds(const JumpKernel& kernel, const DissipativityParams& params,
                                       const QuadratureOptions& quadrature = {});

}  // namespace lyapsim
