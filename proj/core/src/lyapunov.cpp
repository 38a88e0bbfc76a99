#include "lyapsim/lyapunov.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/numeric/odeint.hpp>

#include "lyapsim/errors.hpp"

namespace lyapsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

// Quintic coefficients of G(s) = v0 + c3 s^3 + c4 s^4 + c5 s^5 on s in [0,1],
// s = (r - rho)/(1 - rho), matching g, g', g'' at both ends.
struct Quintic {
    double v0, c3, c4, c5, h;
};

Quintic quintic(const LyapunovProfile& V) {
    const double h = 1.0 - V.rho;
    const double v0 = V.inner_value();
    const double A = 1.0 - v0;
    const double B = V.p * h;
    const double C = V.p * (V.p - 1.0) * h * h;
    return {v0, 10.0 * A - 4.0 * B + C / 2.0, -15.0 * A + 7.0 * B - C, 6.0 * A - 3.0 * B + C / 2.0, h};
}

int piece(const LyapunovProfile& V, double r) { return r <= V.rho ? 0 : (r < 1.0 ? 1 : 2); }

// V(x+z) - V(x) - [compensate] grad V(x).z for |x| = u, |z| = r and
// cos(angle(x,z)) = c. Written through s = |x+z| - |x| to avoid cancellation.
double jump_increment(const LyapunovProfile& V, double u, double r, double c, bool compensate) {
    if (u == 0.0) return V.g(r) - V.g(0.0);
    const double w = std::sqrt(std::max(0.0, u * u + r * r + 2.0 * u * r * c));
    const double s = (2.0 * u * r * c + r * r) / (w + u);
    const double rem = V.remainder(u, s, w);
    const double g1 = V.g(u, 1);
    if (compensate) return rem + g1 * (r * r - r * c * s) / (w + u);
    return rem + g1 * s;
}

QuadratureResult integrate_pieces(const Integrand& f, double a, double b, std::vector<double> cuts,
                                  const QuadratureOptions& opts) {
    cuts.push_back(a);
    cuts.push_back(b);
    std::erase_if(cuts, [&](double c) { return !(c >= a && c <= b) || !std::isfinite(c); });
    std::sort(cuts.begin(), cuts.end());
    // Cuts computed along different routes can land a few ulps apart; a sliver
    // piece only feeds noise into the error estimate.
    const double merge = 1e-12 * std::max(std::abs(a), std::abs(b));
    cuts.erase(std::unique(cuts.begin(), cuts.end(), [&](double x, double y) { return y - x <= merge; }),
               cuts.end());
    if (cuts.back() != b) cuts.back() = b;
    QuadratureResult total;
    double magnitude = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const auto r = integrate_endpoint_singular(f, cuts[i], cuts[i + 1], opts);
        total.value += r.value;
        total.error += r.error;
        magnitude += std::abs(r.value);
    }
    total.converged = std::isfinite(total.value) && total.error <= std::max(opts.abs_tol, opts.rel_tol * magnitude);
    return total;
}

// Average of f(c) over the jump directions of `kernel` seen from x, c the
// cosine between x and the jump.
template <class F>
double direction_average(const JumpKernel& kernel, std::span<const double> x, double u, F&& f) {
    const int n = kernel.dimension;
    switch (kernel.direction) {
        case DirectionLaw::positive:
            return f(u > 0.0 ? (x[0] > 0.0 ? 1.0 : -1.0) : 1.0);
        case DirectionLaw::axes:
            if (n > 1) {
                double acc = 0.0;
                for (int i = 0; i < n; ++i) {
                    const double c = u > 0.0 ? x[i] / u : 0.0;
                    acc += f(c) + f(-c);
                }
                return acc / (2.0 * n);
            }
            [[fallthrough]];
        case DirectionLaw::isotropic:
            break;
    }
    if (n == 1 || u == 0.0) return 0.5 * (f(1.0) + f(-1.0));
    // Uniform direction: the angle phi to x has density sin^{n-2} / Z_n.
    const double z = std::sqrt(std::numbers::pi) * std::tgamma((n - 1) / 2.0) / std::tgamma(n / 2.0);
    QuadratureOptions inner;
    inner.rel_tol = 1e-10;
    const auto res = integrate_smooth(
        [&](double phi) { return f(std::cos(phi)) * std::pow(std::sin(phi), n - 2); }, 0.0, std::numbers::pi,
        inner);
    return res.value / z;
}

// Jump sizes r at which |x + r e| meets a mollifier boundary. Isotropic
// averages only kink where the whole sphere first or last touches it; the
// discrete laws kink wherever one of their directions crosses.
std::vector<double> boundary_radii(const JumpKernel& kernel, std::span<const double> x, double u, double rho) {
    std::vector<double> out = {std::abs(u - 1.0), u + 1.0, std::abs(u - rho), u + rho};
    if (kernel.direction != DirectionLaw::axes || kernel.dimension == 1 || u == 0.0) return out;
    for (double xi : x) {
        for (double c : {xi / u, -xi / u}) {
            for (double b : {rho, 1.0}) {
                const double disc = b * b - u * u * (1.0 - c * c);
                if (disc < 0.0) continue;
                for (double r : {-u * c - std::sqrt(disc), -u * c + std::sqrt(disc)})
                    if (r > 0.0) out.push_back(r);
            }
        }
    }
    return out;
}

}  // namespace

// --- profile ----------------------------------------------------------------

LyapunovProfile LyapunovProfile::make(double p, double gamma, double rho) {
    if (!(p > 0.0)) throw DomainError("Lyapunov exponent p must be positive");
    if (!(rho > 0.0 && rho < 1.0)) throw DomainError("mollifier radius rho must lie in (0,1)");
    LyapunovProfile V;
    V.p = p;
    V.gamma = gamma;
    V.rho = rho;
    return V;
}

double LyapunovProfile::inner_value() const { return 1.0 / (1.0 + 1.5 * p); }

std::string LyapunovProfile::mollifier_id() const {
    return "quintic-hermite(rho=" + format_number(rho) + ",v0=1/(1+1.5p))";
}

double LyapunovProfile::g(double r, int k) const {
    switch (piece(*this, r)) {
        case 0:
            return k == 0 ? inner_value() : 0.0;
        case 1: {
            const auto q = quintic(*this);
            const double s = (r - rho) / q.h;
            double d = 0.0;
            switch (k) {
                case 0: d = q.v0 + s * s * s * (q.c3 + s * (q.c4 + s * q.c5)); break;
                case 1: d = s * s * (3.0 * q.c3 + s * (4.0 * q.c4 + s * 5.0 * q.c5)); break;
                case 2: d = s * (6.0 * q.c3 + s * (12.0 * q.c4 + s * 20.0 * q.c5)); break;
                default: d = 6.0 * q.c3 + s * (24.0 * q.c4 + s * 60.0 * q.c5); break;
            }
            return d / std::pow(q.h, k);
        }
        default: {
            double coef = 1.0;
            for (int j = 0; j < k; ++j) coef *= p - j;
            return coef * std::pow(r, p - k);
        }
    }
}

namespace {

// Taylor remainder of the closed form of piece `k` about u; each form extends
// smoothly past its own interval, so u may sit on a piece boundary.
double piece_remainder(const LyapunovProfile& V, int k, double u, double s) {
    const double rho = V.rho, p = V.p;
    switch (k) {
        case 0:
            return 0.0;
        case 1: {
            // Exact Taylor expansion of the quintic about u.
            const auto q = quintic(V);
            const double sg = (u - rho) / q.h;
            const double t = s / q.h;
            const double g2 = sg * (6.0 * q.c3 + sg * (12.0 * q.c4 + sg * 20.0 * q.c5));
            const double g3 = 6.0 * q.c3 + sg * (24.0 * q.c4 + sg * 60.0 * q.c5);
            const double g4 = 24.0 * q.c4 + 120.0 * q.c5 * sg;
            return t * t * (g2 / 2.0 + t * (g3 / 6.0 + t * (g4 / 24.0 + t * q.c5)));
        }
        default: {
            // u^p ((1+e)^p - 1 - p e), e = s/u.
            const double e = s / u;
            double f;
            if (std::abs(e) < 1e-2) {
                f = 0.0;
                double binom = p * (p - 1.0) / 2.0, ek = e * e;
                for (int j = 2; j <= 12; ++j) {
                    f += binom * ek;
                    binom *= (p - j) / (j + 1.0);
                    ek *= e;
                }
            } else {
                f = std::expm1(p * std::log1p(e)) - p * e;
            }
            return std::pow(u, p) * f;
        }
    }
}

}  // namespace

double LyapunovProfile::remainder(double u, double s, double w) const {
    int pu = piece(*this, u);
    const int pw = piece(*this, w);
    if (pu == pw) return piece_remainder(*this, pu, u, s);
    // Walk boundary by boundary: R(u->w) = R(u->b) + R(b->w) + (g'(b) - g'(u)) (w - b).
    // g is C^2, so every part stays small and nothing cancels.
    double acc = 0.0;
    while (pu != pw) {
        const int next = pw > pu ? pu + 1 : pu - 1;
        const double b = std::max(pu, next) == 1 ? rho : 1.0;
        s -= b - u;  // now w - b, exact when u sits on b
        acc += piece_remainder(*this, pu, u, b - u) + (g(b, 1) - g(u, 1)) * s;
        u = b;
        pu = next;
    }
    return acc + piece_remainder(*this, pu, u, s);
}

KeyValues LyapunovProfile::to_kv() const {
    return {{"p", format_number(p)},           {"gamma", format_number(gamma)},
            {"mollifier", mollifier_id()},     {"C_V", format_number(C_V)},
            {"c_V", format_number(c_V)},       {"V_star", format_number(V_star)},
            {"c_star", format_number(c_star)}};
}

double eval_V(const LyapunovProfile& profile, std::span<const double> x) { return profile.g(norm(x)); }

Vec grad_V(const LyapunovProfile& profile, std::span<const double> x) {
    const double u = norm(x);
    Vec out(x.size(), 0.0);
    if (u == 0.0) return out;
    const double f = profile.g(u, 1) / u;
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = f * x[i];
    return out;
}

std::vector<double> hess_V(const LyapunovProfile& profile, std::span<const double> x) {
    const std::size_t n = x.size();
    const double u = norm(x);
    std::vector<double> h(n * n, 0.0);
    if (u == 0.0) {
        for (std::size_t i = 0; i < n; ++i) h[i * n + i] = profile.g(0.0, 2);
        return h;
    }
    const double radial = profile.g(u, 2);
    const double tangential = profile.g(u, 1) / u;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double xx = x[i] * x[j] / (u * u);
            h[i * n + j] = radial * xx + tangential * ((i == j ? 1.0 : 0.0) - xx);
        }
    return h;
}

// --- drift decomposition ----------------------------------------------------

DriftDecomposition drift_decomposition(const ModelSpec& model, const LyapunovProfile& profile,
                                       std::span<const double> x, const QuadratureOptions& quadrature) {
    const int n = model.dimension;
    if (static_cast<int>(x.size()) != n) throw DomainError("point dimension differs from model dimension");
    DriftDecomposition d;
    const double u = norm(x);

    Vec a(n);
    model.drift(0.0, x, a);
    const Vec grad = grad_V(profile, x);
    for (int i = 0; i < n; ++i) d.aD += grad[i] * a[i];

    const auto hess = hess_V(profile, x);
    std::vector<double> b(static_cast<std::size_t>(n) * n);
    model.covariance(0.0, x, b);
    double tr = 0.0;
    for (int i = 0; i < n * n; ++i) tr += hess[i] * b[i];
    d.aM = 0.5 * tr;

    const JumpKernel& k = model.kernel;
    // Radii where |x+z| can cross a mollifier boundary; V is only C^2 there.
    const std::vector<double> kinks = boundary_radii(k, x, u, profile.rho);

    if (k.small_model == SmallJumpModel::gaussian_proxy) {
        double lap = 0.0;
        for (int i = 0; i < n; ++i) lap += hess[i * n + i];
        d.aN = 0.5 * k.small_variance * lap;
    } else if (k.small_model == SmallJumpModel::stable_like && k.small_coeff > 0.0) {
        const double as = k.small_exponent;
        auto f = [&](double r) {
            const double avg = direction_average(k, x, u, [&](double c) { return jump_increment(profile, u, r, c, true); });
            return avg * std::pow(r, -1.0 - as);
        };
        const auto res = integrate_pieces(f, 0.0, 1.0, kinks, quadrature);
        const double w = k.small_coeff * k.axis_count();
        d.aN = w * res.value;
        d.error_aN = w * res.error;
        if (!res.converged) throw QuadratureError("small-jump term aN did not converge", d.aN, d.error_aN);
    }

    if (k.has_large_jumps()) {
        const bool compensate = model.convention == DriftConvention::compensated;
        const double alpha = k.tail_exponent;
        if (!(profile.p < alpha)) throw DivergenceError("large-jump term aJ needs p < alpha");
        if (compensate && !k.is_symmetric() && alpha <= 1.0) {
            throw DivergenceError("compensated large jumps need alpha > 1");
        }
        // r = w^{-1/(alpha-p)} turns alpha r^{-alpha-1} dr into alpha/(alpha-p) r^{-p} dw,
        // so the integrand stays bounded as r -> inf.
        const double q = alpha - profile.p;
        auto f = [&](double w) {
            const double r = std::pow(w, -1.0 / q);
            const double avg =
                direction_average(k, x, u, [&](double c) { return jump_increment(profile, u, r, c, compensate); });
            return avg * std::pow(r, -profile.p);
        };
        std::vector<double> wcuts;
        for (double r : kinks)
            if (r > 1.0) wcuts.push_back(std::pow(r, -q));
        const auto res = integrate_pieces(f, 0.0, 1.0, wcuts, quadrature);
        const double scale = k.large_rate() * alpha / q;
        d.aJ = scale * res.value;
        d.error_aJ = scale * res.error;
        if (!res.converged) throw QuadratureError("large-jump term aJ did not converge", d.aJ, d.error_aJ);
    }
    d.aV = d.aD + d.aM + d.aN + d.aJ;
    return d;
}

// --- certification ----------------------------------------------------------

CertificationGrid CertificationGrid::standard(double r0, int dimension) {
    CertificationGrid g;
    for (int k = 0; k < 8; ++k) g.radii.push_back(r0 * k / 8.0);
    for (int k = 0; k < 12; ++k) g.radii.push_back(r0 * std::pow(1e4, k / 11.0));
    g.directions = dimension == 1 ? 2 : (dimension == 2 ? 8 : 16);
    return g;
}

double default_c_V(const DissipativityParams& params) {
    const double pb = params.p * params.beta;
    return params.kappa == -1.0 ? 0.9 * (pb - critical_constant(params)) : 0.9 * pb;
}

LyapunovCertificate certify_L_condition(const ModelSpec& model, const DissipativityParams& params,
                                        const CertificationGrid& grid, double c_V,
                                        const QuadratureOptions& quadrature) {
    params.validate(model.dimension);
    const ExponentReport rep = exponent_report(params);
    if (rep.critical_ok && !(rep.critical_ok->first && rep.critical_ok->second)) {
        throw CertificationError("critical-case conditions on the diffusion and jump constants fail");
    }
    if (grid.radii.empty()) throw DomainError("empty certification grid");

    LyapunovCertificate cert;
    cert.profile = LyapunovProfile::make(params.p, rep.gamma);
    auto& V = cert.profile;
    V.c_V = c_V > 0.0 ? c_V : default_c_V(params);
    V.c_star = 0.9 * V.c_V;
    cert.radii = grid.radii;
    cert.rel_tol = quadrature.rel_tol;
    if (!(V.c_V > 0.0)) {
        cert.reason = "no positive rate c_V is admissible";
        return cert;
    }

    auto dirs = sphere_directions(model.dimension, grid.directions, grid.seed);
    if (model.nonnegative) {
        std::erase_if(dirs, [](const Vec& d) {
            return std::any_of(d.begin(), d.end(), [](double v) { return v < 0.0; });
        });
    }
    cert.directions = static_cast<int>(dirs.size());

    struct Sample {
        double h, aV, Vx;
        Vec x;
    };
    std::vector<std::vector<Sample>> shells;
    double max_h = -kInf;
    for (double r : grid.radii) {
        std::vector<Sample> shell;
        for (const auto& dir : (r == 0.0 ? std::vector<Vec>{dirs.front()} : dirs)) {
            Vec x(model.dimension);
            for (int i = 0; i < model.dimension; ++i) x[i] = r * dir[i];
            const auto dd = drift_decomposition(model, V, x, quadrature);
            const double Vx = eval_V(V, x);
            const double h = dd.aV + V.c_V * std::pow(Vx, V.gamma);
            if (!std::isfinite(h)) {
                cert.reason = "non-finite drift of V";
                cert.violating_point = x;
                return cert;
            }
            if (h > max_h) {
                max_h = h;
                cert.argmax_point = x;
            }
            shell.push_back({h, dd.aV, Vx, x});
        }
        double shell_max = -kInf;
        for (const auto& s : shell) shell_max = std::max(shell_max, s.h);
        cert.shell_max_h.push_back(shell_max);
        shells.push_back(std::move(shell));
    }

    V.C_V = std::max(max_h, 0.0);
    cert.worst_margin = kInf;
    for (const auto& shell : shells)
        for (const auto& s : shell) cert.worst_margin = std::min(cert.worst_margin, V.C_V - s.h);

    const std::size_t m = cert.shell_max_h.size();
    cert.tail_margin = V.C_V - cert.shell_max_h.back();
    bool decreasing = true;
    for (std::size_t i = m >= 3 ? m - 3 : 0; i + 1 < m; ++i)
        decreasing = decreasing && cert.shell_max_h[i + 1] <= cert.shell_max_h[i];
    const bool interior_peak = cert.tail_margin > 0.0 || (V.C_V == 0.0 && cert.shell_max_h.back() < 0.0);
    if (!decreasing || !interior_peak) {
        cert.reason = "aV + c_V V^gamma does not decay on the outer shells: no finite C_V";
        const auto& outer = shells.back();
        cert.violating_point =
            std::max_element(outer.begin(), outer.end(), [](auto& a, auto& b) { return a.h < b.h; })->x;
        return cert;
    }

    // V_*: first shell from which aV <= -c_* V^gamma holds on every later shell.
    std::size_t first = m;
    for (std::size_t i = m; i-- > 0;) {
        const bool ok = std::all_of(shells[i].begin(), shells[i].end(),
                                    [&](const Sample& s) { return s.aV <= -V.c_star * std::pow(s.Vx, V.gamma); });
        if (!ok) break;
        first = i;
    }
    if (first == m) {
        cert.reason = "no shell satisfies aV <= -c_* V^gamma";
        return cert;
    }
    cert.R_star = grid.radii[first];
    V.V_star = std::max(1.0, V.g(cert.R_star));
    cert.pass = true;
    cert.reason = "ok";
    return cert;
}

KeyValues LyapunovCertificate::to_kv() const {
    KeyValues kv = {{"pass", format_bool(pass)},
                    {"reason", reason},
                    {"worst_margin", format_number(worst_margin)},
                    {"tail_margin", format_number(tail_margin)},
                    {"R_star", format_number(R_star)},
                    {"directions", std::to_string(directions)},
                    {"radii", std::to_string(radii.size())},
                    {"radius_max", format_number(radii.empty() ? 0.0 : radii.back())},
                    {"quadrature_rel_tol", format_number(rel_tol)}};
    append_kv(kv, "profile", profile.to_kv());
    return kv;
}

// --- flows ------------------------------------------------------------------

double flow_Phi(double gamma, double v) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("flow: gamma must lie in (0,1)");
    if (!(v >= 0.0)) throw DomainError("flow: v must be nonnegative");
    return (std::pow(v, 1.0 - gamma) - 1.0) / (1.0 - gamma);
}

double flow_Phi_inverse(double gamma, double y) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("flow: gamma must lie in (0,1)");
    const double base = 1.0 + (1.0 - gamma) * y;
    if (!(base >= 0.0)) throw DomainError("flow: Phi^{-1} argument below Phi(0)");
    return std::pow(base, 1.0 / (1.0 - gamma));
}

double flow_H(double gamma, double c_star, double t, double v) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("flow_H needs gamma in (0,1); use solve_upsilon otherwise");
    if (!(t >= 0.0 && v >= 0.0)) throw DomainError("flow_H needs t, v >= 0");
    return std::pow((1.0 - gamma) * c_star * t + std::pow(v, 1.0 - gamma), 1.0 / (1.0 - gamma));
}

double solve_upsilon(double gamma, double C_V, double c_V, double upsilon0, double t) {
    if (!(upsilon0 >= 0.0 && t >= 0.0)) throw DomainError("solve_upsilon needs upsilon0, t >= 0");
    if (t == 0.0) return upsilon0;
    using State = std::array<double, 1>;
    namespace ode = boost::numeric::odeint;
    auto rhs = [=](const State& y, State& dy, double) { dy[0] = C_V - c_V * std::pow(std::max(y[0], 0.0), gamma); };
    State y = {upsilon0};
    auto stepper = ode::make_controlled(1e-13, 1e-13, ode::runge_kutta_dopri5<State>());
    const double scale = std::abs(C_V) + c_V * std::pow(std::max(upsilon0, 1.0), gamma);
    const double dt0 = std::min(t, 1e-3 / std::max(scale, 1e-300) * std::max(upsilon0, 1.0));
    ode::integrate_adaptive(stepper, rhs, y, 0.0, t, dt0);
    return y[0];
}

double radial_transform_U(double kappa, std::span<const double> x) {
    if (!(kappa > 1.0)) throw DomainError("U(x) = |x|^{1-kappa} needs kappa > 1");
    const double r = norm(x);
    if (r == 0.0) throw DomainError("U(x) is singular at x = 0");
    return std::pow(r, 1.0 - kappa);
}

double superlinear_growth_rate(double beta, double kappa) {
    if (!(kappa > 1.0)) throw DomainError("growth rate needs kappa > 1");
    return beta * (kappa - 1.0);
}

double passage_tail_bound(double gamma, double c_star, double t, double V_sigma) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("passage tail bound needs gamma in (0,1)");
    const double e = -1.0 / (1.0 - gamma);
    return std::pow((1.0 - gamma) * c_star, e) * std::pow(t, e) * V_sigma;
}

double passage_moment_bound(double p, double kappa, double c_star, double x0_norm) {
    if (!(kappa < 1.0)) throw DomainError("passage moment bound needs kappa < 1");
    return std::pow((1.0 - kappa) * c_star / p, -p / (1.0 - kappa)) * std::pow(x0_norm, p);
}

}  // namespace lyapsim
