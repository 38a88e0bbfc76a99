#include "lyapsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "lyapsim/errors.hpp"
#include "lyapsim/random.hpp"
#include "lyapsim/sampling.hpp"

namespace lyapsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// int_lo^hi r^{e-1} dr, the radial integral behind every stable-like moment.
double power_integral(double e, double lo, double hi) {
    if (e == 0.0) {
        if (lo <= 0.0) throw DivergenceError("small-jump moment diverges at the origin");
        return std::log(hi / lo);
    }
    if (e < 0.0 && lo <= 0.0) throw DivergenceError("small-jump moment diverges at the origin");
    return (std::pow(hi, e) - std::pow(lo, e)) / e;
}

double norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

// Largest eigenvalue of a symmetric PSD matrix by power iteration.
double largest_eigenvalue(const std::vector<double>& b, int n) {
    std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n))), w(n);
    double lambda = 0.0;
    for (int it = 0; it < 200; ++it) {
        for (int i = 0; i < n; ++i) {
            w[i] = 0.0;
            for (int j = 0; j < n; ++j) w[i] += b[i * n + j] * v[j];
        }
        const double nw = norm(w);
        if (nw == 0.0) return 0.0;
        for (int i = 0; i < n; ++i) v[i] = w[i] / nw;
        if (std::abs(nw - lambda) <= 1e-14 * nw) return nw;
        lambda = nw;
    }
    return lambda;
}

DiffusionField constant_diffusion(int n, double sigma) {
    return [n, sigma](double, std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        for (int i = 0; i < n; ++i) out[i * n + i] = sigma;
    };
}

}  // namespace

// --- JumpKernel -------------------------------------------------------------

JumpKernel JumpKernel::none(int dimension) {
    JumpKernel k;
    k.dimension = dimension;
    return k;
}

JumpKernel JumpKernel::pareto(int dimension, double alpha, double mass, DirectionLaw direction) {
    JumpKernel k;
    k.dimension = dimension;
    k.tail_exponent = alpha;
    k.large_mass = mass;
    k.direction = direction;
    k.validate();
    return k;
}

JumpKernel JumpKernel::symmetric_stable(int dimension, double alpha, double scale) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("stable kernel: alpha must lie in (0,2)");
    if (!(scale > 0.0)) throw DomainError("stable kernel: scale must be positive");
    // Levy density c_alpha scale^alpha |z|^{-1-alpha} per coordinate, both signs.
    const double c = std::tgamma(1.0 + alpha) * std::sin(std::numbers::pi * alpha / 2.0) / std::numbers::pi;
    const double radial = 2.0 * c * std::pow(scale, alpha);
    JumpKernel k;
    k.dimension = dimension;
    k.tail_exponent = alpha;
    k.large_mass = radial / alpha;
    k.small_model = SmallJumpModel::stable_like;
    k.small_exponent = alpha;
    k.small_coeff = radial;
    k.direction = DirectionLaw::axes;
    k.validate();
    return k;
}

bool JumpKernel::has_small_jumps() const {
    switch (small_model) {
        case SmallJumpModel::stable_like: return small_coeff > 0.0;
        case SmallJumpModel::gaussian_proxy: return small_variance > 0.0;
        case SmallJumpModel::none: return false;
    }
    return false;
}

double JumpKernel::large_rate() const { return has_large_jumps() ? large_mass * axis_count() : 0.0; }

double JumpKernel::tail_mass(double x) const {
    if (!(x >= 1.0)) throw DomainError("tail mass is defined for x >= 1");
    return large_rate() * std::pow(x, -tail_exponent);
}

double JumpKernel::large_moment(double q) const {
    if (!has_large_jumps()) return 0.0;
    if (q >= tail_exponent) throw DivergenceError("large-jump moment of order >= alpha is infinite");
    return large_rate() * tail_exponent / (tail_exponent - q);
}

double JumpKernel::small_moment(double q, double lo, double hi) const {
    if (!(lo >= 0.0 && lo < hi && hi <= 1.0)) throw DomainError("small moment: need 0 <= lo < hi <= 1");
    switch (small_model) {
        case SmallJumpModel::none:
            return 0.0;
        case SmallJumpModel::gaussian_proxy:
            if (q != 2.0 || lo != 0.0 || hi != 1.0) {
                throw DomainError("gaussian proxy only carries the total second moment");
            }
            return small_variance * dimension;
        case SmallJumpModel::stable_like:
            if (small_coeff == 0.0) return 0.0;
            return small_coeff * axis_count() * power_integral(q - small_exponent, lo, hi);
    }
    return 0.0;
}

double JumpKernel::small_rate(double lo) const {
    if (small_model != SmallJumpModel::stable_like || !(lo > 0.0) || lo >= 1.0) return 0.0;
    return small_moment(0.0, lo, 1.0);
}

Vec JumpKernel::large_mean() const {
    Vec m(dimension, 0.0);
    if (!has_large_jumps() || is_symmetric()) return m;
    m[0] = tail_exponent > 1.0 ? large_mass * tail_exponent / (tail_exponent - 1.0) : kInf;
    return m;
}

void JumpKernel::validate() const {
    if (dimension < 1) throw DomainError("kernel dimension must be positive");
    if (large_mass < 0.0) throw DomainError("kernel large_mass must be nonnegative");
    if (large_mass > 0.0 && !(tail_exponent > 0.0)) throw DomainError("kernel tail exponent must be positive");
    if (direction == DirectionLaw::positive && dimension != 1) {
        throw DomainError("one-sided jumps are one-dimensional");
    }
    if (small_model == SmallJumpModel::stable_like &&
        (!(small_exponent >= 0.0 && small_exponent < 2.0) || small_coeff < 0.0)) {
        throw DomainError("stable-like small jumps need exponent in [0,2) and a nonnegative coefficient");
    }
    if (small_model == SmallJumpModel::gaussian_proxy && small_variance < 0.0) {
        throw DomainError("gaussian proxy variance must be nonnegative");
    }
}

// --- ModelSpec --------------------------------------------------------------

std::string to_string(Preset preset) {
    switch (preset) {
        case Preset::generic: return "generic";
        case Preset::storage: return "storage";
        case Preset::lorenz84: return "lorenz84";
        case Preset::gradient_diffusion: return "gradient_diffusion";
        case Preset::linear_ou: return "linear_ou";
        case Preset::power_drift: return "power_drift";
    }
    return "generic";
}

std::string to_string(DriftConvention convention) {
    return convention == DriftConvention::truncated ? "truncated" : "compensated";
}

void ModelSpec::drift_in(DriftConvention target, double t, std::span<const double> x,
                         std::span<double> out) const {
    drift(t, x, out);
    if (target == convention) return;
    // A^inf = A^{<=1} + int_{|z|>1} z K(dz).
    const Vec m = kernel.large_mean();
    const double sign = target == DriftConvention::compensated ? 1.0 : -1.0;
    for (int i = 0; i < dimension; ++i) {
        if (m[i] == 0.0) continue;
        if (!std::isfinite(m[i])) throw DivergenceError("compensated drift needs a finite first jump moment");
        out[i] += sign * m[i];
    }
}

void ModelSpec::covariance(double t, std::span<const double> x, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    if (!diffusion || noise_dimension == 0) return;
    const int n = dimension, m = noise_dimension;
    std::vector<double> s(static_cast<std::size_t>(n) * m);
    diffusion(t, x, s);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int k = 0; k < m; ++k) acc += s[i * m + k] * s[j * m + k];
            out[i * n + j] = acc;
        }
}

double ModelSpec::value(const std::string& key) const {
    const auto it = preset_values.find(key);
    if (it == preset_values.end()) throw DomainError("model '" + name + "' has no value '" + key + "'");
    return it->second;
}

void ModelSpec::validate() const {
    if (dimension < 1) throw DomainError("model dimension must be positive");
    if (!drift) throw DomainError("model has no drift");
    if (kernel.dimension != dimension) throw DomainError("kernel dimension differs from model dimension");
    if ((noise_dimension > 0) != static_cast<bool>(diffusion)) {
        throw DomainError("diffusion factor and noise dimension disagree");
    }
    kernel.validate();
}

double storage_rate(double kappa, double x) { return x > 1.0 ? std::pow(x, kappa) : x; }

ModelSpec make_storage(double kappa, double alpha, DriftConvention convention) {
    if (!(kappa >= -1.0)) throw DomainError("storage: kappa must be >= -1");
    ModelSpec m;
    m.name = "storage";
    m.preset = Preset::storage;
    m.preset_values = {{"kappa", kappa}, {"alpha", alpha}, {"beta", 1.0}, {"r0", 1.0}};
    m.dimension = 1;
    m.kernel = JumpKernel::pareto(1, alpha, 1.0, DirectionLaw::positive);
    m.convention = convention;
    // The physical system is dX = -r(X) dt + dZ; a compensated declaration adds
    // the jump mean back so both conventions describe the same process.
    const double shift = convention == DriftConvention::compensated ? m.kernel.large_mean()[0] : 0.0;
    if (!std::isfinite(shift)) throw DivergenceError("storage: compensated form needs alpha > 1");
    m.drift = [kappa, shift](double, std::span<const double> x, std::span<double> out) {
        out[0] = -storage_rate(kappa, x[0]) + shift;
    };
    m.nonnegative = true;
    m.validate();
    return m;
}

ModelSpec make_lorenz84(double a, double b, double c, double gamma, double alpha, double r0,
                        double noise_scale) {
    if (!(a > 0.0 && c > 0.0 && gamma >= 0.0 && r0 > 0.0)) throw DomainError("lorenz84: invalid parameters");
    ModelSpec m;
    m.name = "lorenz84";
    m.preset = Preset::lorenz84;
    m.preset_values = {{"a", a},         {"b", b},     {"c", c},
                       {"gamma", gamma}, {"alpha", alpha}, {"r0", r0},
                       {"kappa", gamma + 1.0}, {"beta", c * std::min(a, 1.0)}, {"noise_scale", noise_scale}};
    m.dimension = 3;
    m.drift = [a, b, c, gamma, r0](double, std::span<const double> x, std::span<double> out) {
        const double X = x[0], Y = x[1], Z = x[2];
        const double phi = c * std::pow(std::max(norm(x), r0), gamma);
        out[0] = phi * (-Y * Y - Z * Z - a * X);
        out[1] = phi * (X * Y - b * X * Z - Y);
        out[2] = phi * (b * X * Y + X * Z - Z);
    };
    m.kernel = JumpKernel::symmetric_stable(3, alpha, noise_scale);
    m.validate();
    return m;
}

ModelSpec make_gradient_diffusion(double beta, double sigma) {
    if (!(beta > 0.0 && sigma > 0.0)) throw DomainError("gradient_diffusion: beta and sigma must be positive");
    constexpr double r0 = 10.0;
    ModelSpec m;
    m.name = "gradient_diffusion";
    m.preset = Preset::gradient_diffusion;
    // a(x).x = -beta x^2/(1+x^2) <= -beta R0^2/(1+R0^2) on |x| >= R0.
    m.preset_values = {{"beta_drift", beta}, {"sigma", sigma}, {"kappa", -1.0},
                       {"beta", beta * r0 * r0 / (1.0 + r0 * r0)}, {"r0", r0}};
    m.dimension = 1;
    m.noise_dimension = 1;
    m.drift = [beta](double, std::span<const double> x, std::span<double> out) {
        out[0] = -beta * x[0] / (1.0 + x[0] * x[0]);
    };
    m.diffusion = constant_diffusion(1, sigma);
    m.kernel = JumpKernel::none(1);
    m.validate();
    return m;
}

ModelSpec make_linear_ou(double beta, double sigma, double alpha, double jump_mass, int dimension) {
    if (!(beta > 0.0 && sigma >= 0.0)) throw DomainError("linear_ou: need beta > 0, sigma >= 0");
    ModelSpec m;
    m.name = "linear_ou";
    m.preset = Preset::linear_ou;
    m.preset_values = {{"beta", beta}, {"sigma", sigma}, {"alpha", alpha}, {"kappa", 1.0}, {"r0", 1.0}};
    m.dimension = dimension;
    m.drift = [beta](double, std::span<const double> x, std::span<double> out) {
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = -beta * x[i];
    };
    if (sigma > 0.0) {
        m.noise_dimension = dimension;
        m.diffusion = constant_diffusion(dimension, sigma);
    }
    m.kernel = alpha > 0.0 ? JumpKernel::pareto(dimension, alpha, jump_mass, DirectionLaw::isotropic)
                           : JumpKernel::none(dimension);
    m.validate();
    return m;
}

ModelSpec make_power_drift(double beta, double kappa, double alpha, double jump_mass, DirectionLaw direction,
                           DriftConvention convention, double sigma, int dimension) {
    if (!(beta > 0.0 && kappa >= -1.0)) throw DomainError("power_drift: need beta > 0, kappa >= -1");
    ModelSpec m;
    m.name = "power_drift";
    m.preset = Preset::power_drift;
    m.preset_values = {{"beta", beta}, {"kappa", kappa}, {"alpha", alpha}, {"sigma", sigma}, {"r0", 1.0}};
    m.dimension = dimension;
    m.convention = convention;
    m.drift = [beta, kappa](double, std::span<const double> x, std::span<double> out) {
        const double r = norm(x);
        const double f = r >= 1.0 ? beta * std::pow(r, kappa - 1.0) : beta;
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = -f * x[i];
    };
    if (sigma > 0.0) {
        m.noise_dimension = dimension;
        m.diffusion = constant_diffusion(dimension, sigma);
    }
    m.kernel = alpha > 0.0 && jump_mass > 0.0 ? JumpKernel::pareto(dimension, alpha, jump_mass, direction)
                                              : JumpKernel::none(dimension);
    m.validate();
    return m;
}

// --- parameters and exponents -----------------------------------------------

void DissipativityParams::validate(int dimension) const {
    if (!(p > 0.0)) throw DomainError("p must be positive");
    if (!(kappa >= -1.0)) throw DomainError("kappa must be >= -1");
    if (!(beta > 0.0)) throw DomainError("beta must be positive");
    if (!(r0 > 0.0)) throw DomainError("R_0 must be positive");
    if (c_op < 0.0 || c_tr < 0.0 || c_small < 0.0 || c_large_p < 0.0 || (c_second && *c_second < 0.0)) {
        throw DomainError("bounding constants must be nonnegative");
    }
    if (c_tr > dimension * c_op * (1.0 + 1e-12) + 1e-300) throw DomainError("c_tr exceeds n * c_op");
}

KeyValues DissipativityParams::to_kv() const {
    KeyValues kv = {{"p", format_number(p)},           {"kappa", format_number(kappa)},
                    {"beta", format_number(beta)},     {"r0", format_number(r0)},
                    {"c_op", format_number(c_op)},     {"c_tr", format_number(c_tr)},
                    {"c_small", format_number(c_small)}, {"c_large_p", format_number(c_large_p)}};
    kv.emplace_back("c_second", c_second ? format_number(*c_second) : "none");
    return kv;
}

DissipativityParams preset_params(const ModelSpec& model, double p) {
    if (model.preset == Preset::generic) throw DomainError("generic models need explicit parameters");
    DissipativityParams par;
    par.p = p;
    par.kappa = model.value("kappa");
    par.beta = model.value("beta");
    par.r0 = model.value("r0");

    const int n = model.dimension;
    std::vector<double> b(static_cast<std::size_t>(n) * n);
    for (double r : {0.0, 1.0, 10.0, 1e3}) {
        for (const auto& d : sphere_directions(n, 8)) {
            Vec x(n);
            for (int i = 0; i < n; ++i) x[i] = r * d[i];
            model.covariance(0.0, x, b);
            double tr = 0.0;
            for (int i = 0; i < n; ++i) tr += b[i * n + i];
            par.c_tr = std::max(par.c_tr, tr);
            par.c_op = std::max(par.c_op, largest_eigenvalue(b, n));
        }
    }
    const auto& k = model.kernel;
    par.c_small = k.small_moment(2.0);
    par.c_large_p = k.large_moment(p);
    if (!k.has_large_jumps() || k.tail_exponent > 2.0) par.c_second = par.c_small + k.large_moment(2.0);
    return par;
}

bool check_balance(const DissipativityParams& params) { return params.p + params.kappa > 1.0; }

double critical_constant(const DissipativityParams& params) {
    const double p = params.p;
    const double cs = params.c_second.value_or(0.0);
    return p / 2.0 * (params.c_tr + (p - 2.0) * params.c_op + (p - 1.0) * cs);
}

ExponentReport exponent_report(const DissipativityParams& params) {
    if (!check_balance(params)) throw DomainError("balance condition p + kappa > 1 violated");
    const double p = params.p, kappa = params.kappa;
    ExponentReport r;
    r.balance_ok = true;
    r.gamma = (p + kappa - 1.0) / p;
    r.admissible_pX_sup = p + kappa - 1.0;
    if (kappa < 1.0) {
        r.passage_moment_order = p / (1.0 - kappa);
        r.applicable_theorems = {"moment-bound", "passage-time-moments"};
    } else if (kappa == 1.0) {
        r.exp_rate_sup = p * params.beta;
        r.applicable_theorems = {"moment-bound", "passage-time-exponential"};
    } else {
        r.applicable_theorems = {"superlinear-uniform-bound", "superlinear-passage-tail",
                                 "superlinear-uniform-in-x0"};
    }
    if (kappa == -1.0) {
        if (!params.c_second) throw DomainError("critical case kappa = -1 needs c_second");
        const double cs = *params.c_second;
        const double slack = 2.0 * params.beta - params.c_tr - cs;
        const bool first = params.c_tr + cs < 2.0 * params.beta;
        const double denom = params.c_op + cs;
        const bool second = denom > 0.0 ? p < 2.0 + slack / denom : first;
        r.critical_ok = std::make_pair(first, second);
        r.applicable_theorems.push_back("critical-drift");
    }
    return r;
}

KeyValues ExponentReport::to_kv() const {
    KeyValues kv = {{"balance_ok", format_bool(balance_ok)},
                    {"gamma", format_number(gamma)},
                    {"admissible_pX_sup", format_number(admissible_pX_sup)}};
    kv.emplace_back("passage_moment_order", passage_moment_order ? format_number(*passage_moment_order) : "none");
    kv.emplace_back("exp_rate_sup", exp_rate_sup ? format_number(*exp_rate_sup) : "none");
    if (critical_ok) {
        kv.emplace_back("critical_ok.trace", format_bool(critical_ok->first));
        kv.emplace_back("critical_ok.order", format_bool(critical_ok->second));
    } else {
        kv.emplace_back("critical_ok", "none");
    }
    std::string th;
    for (const auto& t : applicable_theorems) th += (th.empty() ? "" : ";") + t;
    kv.emplace_back("applicable", th);
    return kv;
}

DriftConvention certification_convention(const ModelSpec& model, const DissipativityParams& params) {
    if (params.p < 1.0) return DriftConvention::truncated;
    if (params.kappa <= 0.0) return DriftConvention::compensated;
    return model.convention;
}

std::vector<Vec> sphere_directions(int dimension, int count, std::uint64_t seed) {
    if (dimension < 1 || count < 1) throw DomainError("sphere_directions: need dimension, count >= 1");
    std::vector<Vec> dirs;
    if (dimension == 1) {
        dirs.push_back({1.0});
        if (count > 1) dirs.push_back({-1.0});
        return dirs;
    }
    if (dimension == 2) {
        for (int k = 0; k < count; ++k) {
            const double a = 2.0 * std::numbers::pi * k / count;
            dirs.push_back({std::cos(a), std::sin(a)});
        }
        return dirs;
    }
    if (dimension == 3) {
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (int k = 0; k < count; ++k) {
            const double z = 1.0 - (2.0 * k + 1.0) / count;
            const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
            dirs.push_back({s * std::cos(golden * k), s * std::sin(golden * k), z});
        }
        return dirs;
    }
    RandomStream stream(seed, 0);
    JumpKernel iso = JumpKernel::none(dimension);
    for (int k = 0; k < count; ++k) dirs.push_back(sample_direction(iso, stream));
    return dirs;
}

// --- certificates -----------------------------------------------------------

DissipativityCertificate verify_dissipativity(const ModelSpec& model, const DissipativityParams& params,
                                              std::span<const double> radii, int directions_per_radius,
                                              std::uint64_t seed) {
    if (directions_per_radius < 1) throw DomainError("directions_per_radius must be >= 1");
    for (double r : radii)
        if (!(r >= params.r0)) throw DomainError("certification radii must be >= R_0");

    DissipativityCertificate cert;
    cert.convention = certification_convention(model, params);
    cert.radii.assign(radii.begin(), radii.end());
    cert.seed = seed;
    auto dirs = sphere_directions(model.dimension, directions_per_radius, seed);
    if (model.nonnegative) {
        std::erase_if(dirs, [](const Vec& d) {
            return std::any_of(d.begin(), d.end(), [](double v) { return v < 0.0; });
        });
    }
    cert.directions = static_cast<int>(dirs.size());
    cert.worst_margin = kInf;
    bool ok = true;
    Vec x(model.dimension), a(model.dimension);
    for (double r : radii) {
        double worst_here = kInf;
        for (const auto& d : dirs) {
            for (int i = 0; i < model.dimension; ++i) x[i] = r * d[i];
            model.drift_in(cert.convention, 0.0, x, a);
            double ax = 0.0;
            for (int i = 0; i < model.dimension; ++i) ax += a[i] * x[i];
            if (!std::isfinite(ax)) throw SamplingError("non-finite drift at radius " + format_number(r));
            const double bound = params.beta * std::pow(r, 1.0 + params.kappa);
            const double margin = -bound - ax;
            // Exact-equality drifts (storage) land within rounding of zero.
            if (margin < -1e-12 * std::max(bound, std::abs(ax))) ok = false;
            if (margin < worst_here) worst_here = margin;
            if (margin < cert.worst_margin) {
                cert.worst_margin = margin;
                cert.worst_point = x;
                cert.worst_radius = r;
            }
        }
        cert.margin_per_radius.push_back(worst_here);
    }
    cert.pass = ok && !radii.empty();
    return cert;
}

KeyValues DissipativityCertificate::to_kv() const {
    KeyValues kv = {{"pass", format_bool(pass)},
                    {"convention", to_string(convention)},
                    {"worst_margin", format_number(worst_margin)},
                    {"worst_radius", format_number(worst_radius)},
                    {"directions", std::to_string(directions)},
                    {"seed", std::to_string(seed)}};
    std::string pt;
    for (double v : worst_point) pt += (pt.empty() ? "" : ";") + format_number(v);
    kv.emplace_back("worst_point", pt);
    for (std::size_t i = 0; i < radii.size(); ++i) {
        kv.emplace_back("margin.r" + format_number(radii[i]), format_number(margin_per_radius[i]));
    }
    return kv;
}

KernelCertificate verify_kernel_bounds(const JumpKernel& kernel, const DissipativityParams& params,
                                       const QuadratureOptions& quadrature) {
    kernel.validate();
    KernelCertificate cert;
    switch (kernel.small_model) {
        case SmallJumpModel::none:
            break;
        case SmallJumpModel::gaussian_proxy:
            cert.small_integral = kernel.small_variance * kernel.dimension;
            break;
        case SmallJumpModel::stable_like: {
            if (kernel.small_coeff == 0.0) break;
            const double a = kernel.small_exponent;
            const auto res = integrate_endpoint_singular([a](double r) { return std::pow(r, 1.0 - a); }, 0.0, 1.0,
                                                         quadrature);
            if (!res.converged) throw QuadratureError("small-jump integral did not converge", res.value, res.error);
            const double w = kernel.small_coeff * kernel.axis_count();
            cert.small_integral = w * res.value;
            cert.small_error = w * res.error;
            break;
        }
    }
    if (kernel.has_large_jumps()) {
        if (params.p >= kernel.tail_exponent) {
            throw DivergenceError("int_{|z|>1} |z|^p K(dz) is infinite for p >= alpha");
        }
        // r = w^{-1/alpha} maps the Pareto tail onto the unit interval.
        const double e = -params.p / kernel.tail_exponent;
        const auto res = integrate_endpoint_singular([e](double w) { return std::pow(w, e); }, 0.0, 1.0, quadrature);
        if (!res.converged) throw QuadratureError("large-jump integral did not converge", res.value, res.error);
        cert.large_integral = kernel.large_rate() * res.value;
        cert.large_error = kernel.large_rate() * res.error;
    }

    auto within = [&](double value, double err, double bound) {
        return value <= bound * (1.0 + quadrature.rel_tol) + err + quadrature.abs_tol;
    };
    cert.c_small_inferred = !(params.c_small > 0.0);
    cert.c_small = cert.c_small_inferred ? cert.small_integral + cert.small_error : params.c_small;
    cert.c_large_inferred = !(params.c_large_p > 0.0);
    cert.c_large_p = cert.c_large_inferred ? cert.large_integral + cert.large_error : params.c_large_p;
    cert.pass = within(cert.small_integral, cert.small_error, cert.c_small) &&
                within(cert.large_integral, cert.large_error, cert.c_large_p);
    return cert;
}

KeyValues KernelCertificate::to_kv() const {
    return {{"pass", format_bool(pass)},
            {"small_integral", format_number(small_integral)},
            {"small_error", format_number(small_error)},
            {"large_integral", format_number(large_integral)},
            {"large_error", format_number(large_error)},
            {"c_small", format_number(c_small)},
            {"c_small_inferred", format_bool(c_small_inferred)},
            {"c_large_p", format_number(c_large_p)},
            {"c_large_inferred", format_bool(c_large_inferred)}};
}

}  // namespace lyapsim
