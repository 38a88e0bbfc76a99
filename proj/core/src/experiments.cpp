#include "lyapsim/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "json.hpp"

#include "lyapsim/errors.hpp"
#include "lyapsim/estimators.hpp"
#include "lyapsim/integrator.hpp"
#include "lyapsim/oracles.hpp"
#include "lyapsim/plot.hpp"
#include "lyapsim/random.hpp"

namespace lyapsim {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

const std::vector<std::pair<ScenarioId, const char*>> kScenarioNames = {
    {ScenarioId::sublinear_moments, "sublinear-moments"},
    {ScenarioId::linear_exponential_passage, "linear-exponential-passage"},
    {ScenarioId::superlinear_uniform, "superlinear-uniform"},
    {ScenarioId::superlinear_passage, "superlinear-passage"},
    {ScenarioId::storage_optimality, "storage-optimality"},
    {ScenarioId::diffusion_critical, "diffusion-critical"},
    {ScenarioId::lorenz84, "lorenz84"},
    {ScenarioId::lyapunov_certify, "lyapunov-certify"},
    {ScenarioId::oracle_dump, "oracle-dump"},
};

const std::vector<std::string> kModelKeys = {
    "model.preset", "model.kappa", "model.alpha",     "model.beta", "model.sigma", "model.sigma2",
    "model.mass",   "model.direction", "model.convention", "model.dimension", "model.a", "model.b",
    "model.c",      "model.gamma", "model.r0",        "model.noise_scale"};
const std::vector<std::string> kBatchKeys = {"batch.n_paths", "batch.dt",      "batch.horizon",
                                             "batch.record_dt", "batch.x0",    "batch.epsilon",
                                             "batch.max_relative_drift"};
const std::vector<std::string> kCertifyKeys = {"certify.p", "certify.c_V", "certify.waive"};

std::string num(double v) { return format_number(v); }

std::string list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v[i]);
    return s;
}

std::string order_tag(double q) { return "q" + num(q); }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k) { return seed + 0x9E3779B97F4A7C15ULL * k; }

std::vector<std::string> concat(std::initializer_list<std::vector<std::string>> parts) {
    std::vector<std::string> out;
    for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

DirectionLaw parse_direction(const std::string& s) {
    if (s == "isotropic") return DirectionLaw::isotropic;
    if (s == "positive") return DirectionLaw::positive;
    if (s == "axes") return DirectionLaw::axes;
    throw ConfigError("model.direction must be isotropic, positive or axes, got '" + s + "'");
}

DriftConvention parse_convention(const std::string& s) {
    if (s == "truncated") return DriftConvention::truncated;
    if (s == "compensated") return DriftConvention::compensated;
    throw ConfigError("model.convention must be truncated or compensated, got '" + s + "'");
}

struct Ctx {
    std::string task;
    Config cfg;
    RunOptions opt;
    RunResult& res;

    fs::path path(const std::string& rel) const { return opt.out_dir / rel; }
    void artifact(const std::string& rel) {
        const fs::path p(rel);
        if (std::find(res.artifacts.begin(), res.artifacts.end(), p) == res.artifacts.end()) res.artifacts.push_back(p);
    }
    void csv(const std::string& rel, const CsvTable& t) {
        t.write(path(rel));
        artifact(rel);
    }
    void text(const std::string& rel, const std::string& s) {
        write_text(path(rel), s);
        artifact(rel);
    }
    void plot(const std::string& name, const PlotSpec& spec) {
        const std::string stem = "plots/" + name;
        emit_plot_data(spec, path(stem));
        artifact(stem + ".svg");
        artifact(stem + ".csv");
    }
    void check(const std::string& id, const std::string& theorem, bool pass, const std::string& detail) {
        res.checks.push_back({id, theorem, pass, detail});
    }
    std::uint64_t seed() const { return static_cast<std::uint64_t>(cfg.integer("seed", 1)); }
    unsigned workers() const { return std::max(1u, opt.workers); }
};

void set_batch_defaults(Config& c, long n_paths, double dt, double horizon, double record_dt, const std::string& x0) {
    c.set_default("batch.n_paths", std::to_string(n_paths));
    c.set_default("batch.dt", num(dt));
    c.set_default("batch.horizon", num(horizon));
    c.set_default("batch.record_dt", num(record_dt));
    c.set_default("batch.x0", x0);
    c.set_default("seed", "1");
}

SimulationGrid make_grid(const Config& c) {
    SimulationGrid g;
    g.horizon = c.num("batch.horizon");
    g.dt = c.num("batch.dt");
    if (!(g.dt > 0.0)) throw ConfigError("batch.dt must be positive");
    const double rec = c.num("batch.record_dt", g.dt);
    const double ratio = rec / g.dt;
    if (!(ratio >= 1.0) || std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
        throw ConfigError("batch.record_dt must be a positive multiple of batch.dt");
    }
    g.record_every = static_cast<int>(std::lround(ratio));
    g.small_jump_epsilon = c.num("batch.epsilon", g.small_jump_epsilon);
    g.max_relative_drift = c.num("batch.max_relative_drift", g.max_relative_drift);
    g.keep_jump_log = false;
    try {
        g.validate();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("batch: ") + e.what());
    }
    return g;
}

std::size_t n_paths(const Config& c) {
    const long n = c.integer("batch.n_paths", 1000);
    if (n < 1) throw ConfigError("batch.n_paths must be >= 1");
    return static_cast<std::size_t>(n);
}

Vec start_point(const Config& c, const ModelSpec& m) {
    auto x0 = c.nums("batch.x0");
    if (x0.size() == 1 && m.dimension > 1) x0.assign(m.dimension, x0[0]);
    if (static_cast<int>(x0.size()) != m.dimension) {
        throw ConfigError("batch.x0 needs " + std::to_string(m.dimension) + " coordinates");
    }
    return x0;
}

Vec scaled_start(const ModelSpec& m, double radius) {
    // Along the first coordinate; for one-sided models this is the positive half-line.
    Vec x(m.dimension, 0.0);
    x[0] = radius;
    return x;
}

double tail_exponent(const ModelSpec& m) {
    return m.kernel.has_large_jumps() ? m.kernel.tail_exponent : std::numeric_limits<double>::infinity();
}

// --- certification -----------------------------------------------------------

void default_certify_p(Config& c, const ModelSpec& m) {
    if (m.kernel.has_large_jumps()) c.set_default("certify.p", num(m.kernel.tail_exponent - 0.1));
    else c.set_default("certify.p", "2");
}

CertificationOutcome certify_step(Ctx& cx, const ModelSpec& model) {
    const double p = cx.cfg.num("certify.p");
    const double c_V = cx.cfg.num("certify.c_V", 0.0);
    auto out = certify_model(model, p, c_V);
    cx.text("certificate.txt", render_kv(out.to_kv()));
    if (out.lyapunov) {
        const auto& L = *out.lyapunov;
        CsvTable t({"radius", "max_h", "C_V"});
        for (std::size_t i = 0; i < L.radii.size() && i < L.shell_max_h.size(); ++i) {
            t.add_row({num(L.radii[i]), num(L.shell_max_h[i]), num(L.profile.C_V)});
        }
        cx.csv("lyapunov_shells.csv", t);
    }
    cx.res.certification_waived = cx.opt.waive_certify || cx.cfg.flag("certify.waive", false);
    if (!out.pass && !cx.res.certification_waived) throw CertificationError("certification failed: " + out.failure);
    return out;
}

// --- shared estimation blocks ------------------------------------------------

PlotSeries estimate_series(const std::string& name, const std::vector<double>& x, const std::vector<Estimate>& e) {
    PlotSeries s;
    s.name = name;
    s.x = x;
    for (const auto& v : e) {
        s.y.push_back(v.value);
        s.lo.push_back(v.lo());
        s.hi.push_back(v.hi());
    }
    return s;
}

void moment_artifacts(Ctx& cx, const MomentReport& rep, const std::vector<double>& orders, bool log_y) {
    cx.csv("moments.csv", rep.to_csv());
    for (double q : orders) {
        std::vector<double> t;
        std::vector<Estimate> e;
        for (const auto& r : rep.rows) {
            if (r.order != q) continue;
            t.push_back(r.time);
            e.push_back(r.headline());
        }
        PlotSpec spec;
        spec.title = "E|X_t|^" + num(q);
        spec.x_label = "t";
        spec.y_label = "moment";
        spec.log_y = log_y;
        spec.series.push_back(estimate_series("estimate", t, e));
        cx.plot("moments_" + order_tag(q), spec);
    }
}

void bounded_checks(Ctx& cx, const PathBatch& batch, const std::vector<double>& orders, double t_min, double boundary,
                    const std::string& theorem, bool literal_zero_in_ci) {
    CsvTable t({"order", "sup", "sup_hw", "argmax_time", "slope", "slope_lo", "slope_hi"});
    for (double q : orders) {
        const auto sm = estimate_sup_moment(batch, t_min, batch.grid.horizon, q, boundary);
        t.add_row({num(q), num(sm.sup), num(sm.at_argmax.half_width), num(sm.argmax_time), num(sm.trend.slope),
                   num(sm.trend.lo), num(sm.trend.hi)});
        const bool pass = literal_zero_in_ci ? sm.trend.contains_zero() : sm.trend.lo <= 0.0;
        cx.check("bounded-" + order_tag(q), theorem, pass,
                 "sup=" + num(sm.sup) + " slope=" + num(sm.trend.slope) + " ci=[" + num(sm.trend.lo) + ", " +
                     num(sm.trend.hi) + "] over [" + num(t_min) + ", " + num(batch.grid.horizon) + "]");
    }
    cx.csv("sup_moments.csv", t);
}

void divergence_checks(Ctx& cx, const PathBatch& batch, const ModelSpec& model, const std::vector<double>& orders,
                       const std::vector<double>& windows, const std::string& theorem) {
    CsvTable t({"order", "window", "estimate", "half_width", "slope", "slope_lo", "slope_hi", "verdict",
                "oracle_lower_bound"});
    for (double q : orders) {
        const auto d = divergence_trend_test(batch, windows, q, &model);
        for (std::size_t i = 0; i < d.windows.size(); ++i) {
            t.add_row({num(q), num(d.windows[i]), num(d.window_estimates[i].value), num(d.window_estimates[i].half_width),
                       num(d.trend.slope), num(d.trend.lo), num(d.trend.hi), to_string(d.verdict),
                       d.oracle_lower_bound ? num(*d.oracle_lower_bound) : ""});
        }
        cx.check("growing-" + order_tag(q), theorem, d.verdict == TrendVerdict::growing,
                 "verdict=" + to_string(d.verdict) + " slope=" + num(d.trend.slope) + " ci=[" + num(d.trend.lo) +
                     ", " + num(d.trend.hi) + "]");
    }
    cx.csv("divergence.csv", t);
}

// P(|X_t| > R) over all paths; paths that exploded before t count as exceedances.
Estimate exceedance(const PathBatch& batch, double t, double R) {
    std::vector<double> hits;
    hits.reserve(batch.paths.size());
    const double tol = 1e-9 * std::max(1.0, t);
    for (const auto& p : batch.paths) {
        if (p.exploded && *p.exploded_at <= t + tol) {
            hits.push_back(1.0);
            continue;
        }
        const auto i = p.index_of(t, tol);
        if (!i) throw DomainError("time " + num(t) + " is not retained");
        hits.push_back(p.norm_at(*i) > R ? 1.0 : 0.0);
    }
    return mean_estimate(hits);
}

// Empirical storage tails against the lower bound f_t(R); every cell is a check.
void tail_checks(Ctx& cx, const PathBatch& batch, const ModelSpec& model, const std::vector<double>& times,
                 const std::vector<double>& levels, bool plots) {
    const double alpha = model.value("alpha"), kappa = model.value("kappa");
    CsvTable t({"time", "R", "p_hat", "se", "f_t", "margin_sigmas"});
    for (double time : times) {
        std::vector<double> f_vals;
        std::vector<Estimate> emp;
        for (double R : levels) {
            const auto e = exceedance(batch, time, R);
            const double f = storage_tail_lower_bound(alpha, kappa, time, R).value;
            f_vals.push_back(f);
            emp.push_back(e);
            const double sigmas = e.se > 0.0 ? (e.value - f) / e.se : (e.value >= f ? INFINITY : -INFINITY);
            t.add_row({num(time), num(R), num(e.value), num(e.se), num(f), num(sigmas)});
            cx.check("tail-t" + num(time) + "-R" + num(R), "tail-lower-bound", e.value >= f - kInequalitySigmas * e.se,
                     "P(X_t>R)=" + num(e.value) + " se=" + num(e.se) + " f_t(R)=" + num(f));
        }
        if (plots) {
            PlotSpec spec;
            spec.title = "P(X_t > R) at t=" + num(time);
            spec.x_label = "R";
            spec.y_label = "probability";
            spec.log_x = spec.log_y = true;
            spec.series.push_back(estimate_series("empirical", levels, emp));
            PlotSeries oracle;
            oracle.name = "f_t(R)";
            oracle.x = levels;
            oracle.y = f_vals;
            oracle.dashed = true;
            oracle.markers = false;
            spec.series.push_back(oracle);
            spec.dominance = std::make_pair(std::size_t{0}, std::size_t{1});
            cx.plot("tail_t" + num(time), spec);
        }
    }
    cx.csv("tails.csv", t);
}

double passage_level(Ctx& cx, const CertificationOutcome& cert) {
    if (cx.cfg.has("passage.level")) return cx.cfg.num("passage.level");
    if (cert.lyapunov && cert.lyapunov->pass) {
        const double R = std::max(cert.lyapunov->R_star, cert.params.r0);
        cx.cfg.set("passage.level", num(R));
        return R;
    }
    throw ConfigError("passage.level is required when the Lyapunov certificate does not supply R_*");
}

PathBatch passage_batch(Ctx& cx, const ModelSpec& model, double x0, double R, std::uint64_t seed) {
    SimulationGrid g = make_grid(cx.cfg);
    g.horizon = cx.cfg.num("passage.horizon");
    g.record_every = std::max(1, static_cast<int>(std::lround(g.horizon / 200.0 / g.dt)));
    g.watches = {{R, 0.0}};
    g.validate();
    return simulate_batch(model, g, fixed_start(scaled_start(model, x0)), n_paths(cx.cfg), seed, {}, cx.workers());
}

// Passage moments of order p/(1-kappa) against |x0|^p.
void sublinear_passage(Ctx& cx, const ModelSpec& model, const CertificationOutcome& cert) {
    const auto starts = cx.cfg.nums("passage.starts");
    const double R = passage_level(cx, cert);
    const double p = cx.cfg.num("certify.p");
    const double kappa = model.value("kappa");
    if (!(kappa < 1.0)) throw ConfigError("passage moments need kappa < 1");
    const double q = p / (1.0 - kappa);
    const double max_censored = cx.cfg.num("passage.max_censored");
    CsvTable t({"x0", "R", "order", "moment", "se", "bound", "censored_fraction", "median"});
    std::uint64_t k = 100;
    for (double x0 : starts) {
        const auto batch = passage_batch(cx, model, x0, R, derive_seed(cx.seed(), k++));
        PassageRequest req;
        req.orders = {q};
        const auto st = estimate_passage_moments(batch, R, 0.0, req);
        const auto& m = st.moments.front().estimate;
        const double bound = std::pow(x0, p);
        const double rel_se = m.value > 0.0 ? m.se / m.value : 0.0;
        t.add_row({num(x0), num(R), num(q), num(m.value), num(m.se), num(bound), num(st.censored_fraction()),
                   num(st.quantile(0.5))});
        const bool pass = m.value <= bound * (1.0 + kInequalitySigmas * rel_se) && st.censored_fraction() < max_censored;
        cx.check("passage-x0" + num(x0), "passage-time-moments", pass,
                 "E[delta^" + num(q) + "]=" + num(m.value) + " se=" + num(m.se) + " x0^p=" + num(bound) +
                     " R=" + num(R) + " censored=" + num(st.censored_fraction()));
    }
    cx.csv("passage.csv", t);
}

// --- scenarios ---------------------------------------------------------------

void sublinear_moments(Ctx& cx) {
    auto& c = cx.cfg;
    c.set_default("model.preset", "storage");
    c.set_default("model.alpha", "2.5");
    c.set_default("model.kappa", "0");
    set_batch_defaults(c, 10000, 1e-3, 100, 0.5, "0");
    const double horizon = c.num("batch.horizon");
    c.set_default("estimator.bounded_orders", "0.5, 1, 1.4");
    c.set_default("estimator.divergent_orders", "1.6");
    c.set_default("estimator.t_min", num(horizon / 10.0));
    c.set_default("estimator.windows", list({horizon / 8.0, horizon / 4.0, horizon / 2.0, horizon}));
    if (c.str("model.preset") == "storage") {
        c.set_default("estimator.tail_times", "10, 50");
        c.set_default("estimator.tail_levels", "5, 20");
    }
    if (c.has("passage.starts")) {
        c.set_default("passage.horizon", num(10.0 * std::ranges::max(c.nums("passage.starts"))));
        c.set_default("passage.max_censored", "0.05");
    }
    c.check_known(concat({{"scenario", "seed"}, kModelKeys, kBatchKeys, kCertifyKeys,
                          {"estimator.bounded_orders", "estimator.divergent_orders", "estimator.t_min",
                           "estimator.windows", "estimator.tail_times", "estimator.tail_levels", "passage.starts",
                           "passage.level", "passage.horizon", "passage.max_censored"}}));
    const auto model = build_model(c);
    default_certify_p(c, model);
    const auto cert = certify_step(cx, model);

    const auto grid = make_grid(c);
    const auto batch = simulate_batch(model, grid, fixed_start(start_point(c, model)), n_paths(c), cx.seed(), {},
                                      cx.workers());
    const auto bounded = c.nums("estimator.bounded_orders");
    const auto divergent = c.nums("estimator.divergent_orders");
    const double boundary = tail_exponent(model) + model.value("kappa") - 1.0;
    std::vector<double> orders = bounded;
    orders.insert(orders.end(), divergent.begin(), divergent.end());
    const auto times = retained_times(grid, 0.0, grid.horizon);
    moment_artifacts(cx, estimate_moments(batch, times, orders, boundary), orders, false);
    bounded_checks(cx, batch, bounded, c.num("estimator.t_min"), boundary, "moment-bound", true);
    divergence_checks(cx, batch, model, divergent, c.nums("estimator.windows"), "moment-divergence");
    if (c.has("estimator.tail_times")) {
        tail_checks(cx, batch, model, c.nums("estimator.tail_times"), c.nums("estimator.tail_levels"), false);
    }
    if (c.has("passage.starts")) sublinear_passage(cx, model, cert);
}

void storage_optimality(Ctx& cx) {
    auto& c = cx.cfg;
    c.set_default("model.preset", "storage");
    c.set_default("model.alpha", "2.5");
    c.set_default("model.kappa", "0");
    set_batch_defaults(c, 10000, 1e-3, 100, 0.5, "0");
    const double horizon = c.num("batch.horizon");
    c.set_default("estimator.tail_times", "10, 50");
    c.set_default("estimator.tail_levels", "2, 3, 5, 7, 10, 15, 20, 30, 50");
    c.set_default("estimator.windows", list({horizon / 8.0, horizon / 4.0, horizon / 2.0, horizon}));
    c.check_known(concat({{"scenario", "seed"}, kModelKeys, kBatchKeys, kCertifyKeys,
                          {"estimator.tail_times", "estimator.tail_levels", "estimator.windows",
                           "estimator.divergent_orders"}}));
    const auto model = build_model(c);
    if (model.preset != Preset::storage) throw ConfigError("storage-optimality needs model.preset = storage");
    const double threshold = model.value("alpha") + model.value("kappa") - 1.0;
    c.set_default("estimator.divergent_orders", list({threshold, threshold + 0.25}));
    default_certify_p(c, model);
    certify_step(cx, model);

    const auto grid = make_grid(c);
    const auto batch = simulate_batch(model, grid, fixed_start(start_point(c, model)), n_paths(c), cx.seed(), {},
                                      cx.workers());
    tail_checks(cx, batch, model, c.nums("estimator.tail_times"), c.nums("estimator.tail_levels"), true);
    divergence_checks(cx, batch, model, c.nums("estimator.divergent_orders"), c.nums("estimator.windows"),
                      "moment-divergence");
}

void linear_exponential_passage(Ctx& cx) {
    auto& c = cx.cfg;
    c.set_default("model.preset", "linear_ou");
    c.set_default("model.beta", "1");
    c.set_default("model.sigma", "0.5");
    c.set_default("model.alpha", "2.5");
    set_batch_defaults(c, 4000, 1e-3, 40, 0.2, "0");
    c.set_default("passage.starts", "10, 100, 1000");
    c.set_default("passage.horizon", num(c.num("batch.horizon")));
    c.set_default("passage.max_censored", "0.05");
    c.check_known(concat({{"scenario", "seed"}, kModelKeys, kBatchKeys, kCertifyKeys,
                          {"passage.starts", "passage.level", "passage.rate", "passage.horizon",
                           "passage.max_censored"}}));
    const auto model = build_model(c);
    default_certify_p(c, model);
    const auto cert = certify_step(cx, model);
    const double p = c.num("certify.p");
    const double beta = cert.params.beta;
    c.set_default("passage.rate", num(beta));
    const double rate = c.num("passage.rate");
    if (!(rate > 0.0 && rate < p * beta)) throw ConfigError("passage.rate must lie in (0, p beta)");
    const double R = passage_level(cx, cert);
    const auto starts = c.nums("passage.starts");
    const double max_censored = c.num("passage.max_censored");

    CsvTable t({"x0", "R", "rate", "exp_moment", "se", "censored_fraction", "median"});
    std::vector<double> log_x, log_m;
    std::uint64_t k = 0;
    for (double x0 : starts) {
        const auto batch = passage_batch(cx, model, x0, R, derive_seed(cx.seed(), k++));
        PassageRequest req;
        req.exp_rate = rate;
        const auto st = estimate_passage_moments(batch, R, 0.0, req);
        t.add_row({num(x0), num(R), num(rate), num(st.exp_moment->value), num(st.exp_moment->se),
                   num(st.censored_fraction()), num(st.quantile(0.5))});
        cx.check("censoring-x0" + num(x0), "passage-time-exponential", st.censored_fraction() < max_censored,
                 "censored=" + num(st.censored_fraction()));
        log_x.push_back(std::log(x0));
        log_m.push_back(std::log(st.exp_moment->value));
    }
    cx.csv("passage_exponential.csv", t);
    // E exp(c delta) <= C + |x0|^p: growth in x0 no faster than x0^p.
    for (std::size_t i = 1; i < starts.size(); ++i) {
        const double slope = (log_m[i] - log_m[i - 1]) / (log_x[i] - log_x[i - 1]);
        cx.check("growth-x0" + num(starts[i - 1]) + "-" + num(starts[i]), "passage-time-exponential", slope <= p,
                 "log-log slope=" + num(slope) + " p=" + num(p));
    }
}

void superlinear_uniform(Ctx& cx) {
    auto& c = cx.cfg;
    c.set_default("model.preset", "power_drift");
    c.set_default("model.kappa", "3");
    c.set_default("model.alpha", "2.5");
    set_batch_defaults(c, 4000, 1e-3, 20, 0.5, "0");
    c.set_default("estimator.starts", "100, 10000, 1000000");
    c.set_default("estimator.times", "1, 2, 5, 10, 20");
    c.set_default("estimator.order", "2");
    c.check_known(concat({{"scenario", "seed"}, kModelKeys, kBatchKeys, kCertifyKeys,
                          {"estimator.starts", "estimator.times", "estimator.order"}}));
    const auto model = build_model(c);
    default_certify_p(c, model);
    certify_step(cx, model);
    const auto grid = make_grid(c);
    const auto starts = c.nums("estimator.starts");
    const auto times = c.nums("estimator.times");
    const double order = c.num("estimator.order");
    const double boundary = tail_exponent(model);

    std::vector<MomentReport> reports;
    CsvTable t({"x0", "time", "estimate", "half_width", "lo", "hi"});
    PlotSpec spec;
    spec.title = "E|X_t|^" + num(order) + " by start";
    spec.x_label = "t";
    spec.y_label = "moment";
    std::uint64_t k = 0;
    for (double x0 : starts) {
        const auto batch = simulate_batch(model, grid, fixed_start(scaled_start(model, x0)), n_paths(c),
                                          derive_seed(cx.seed(), k++), {}, cx.workers());
        const double orders[] = {order};
        reports.push_back(estimate_moments(batch, times, orders, boundary));
        std::vector<Estimate> e;
        for (const auto& r : reports.back().rows) {
            t.add_row({num(x0), num(r.time), num(r.headline().value), num(r.headline().half_width),
                       num(r.headline().lo()), num(r.headline().hi())});
            e.push_back(r.headline());
        }
        spec.series.push_back(estimate_series("x0=" + num(x0), times, e));
    }
    cx.csv("uniform_moments.csv", t);
    cx.plot("uniform_moments", spec);
    for (double time : times) {
        double max_lo = -INFINITY, min_hi = INFINITY;
        std::string detail;
        for (std::size_t i = 0; i < starts.size(); ++i) {
            const auto& e = reports[i].at(time, order).headline();
            max_lo = std::max(max_lo, e.lo());
            min_hi = std::min(min_hi, e.hi());
            detail += (i ? " " : "") + ("x0=" + num(starts[i]) + ":" + num(e.value) + "+-" + num(e.half_width));
        }
        cx.check("uniform-t" + num(time), "superlinear-moment-bound", max_lo <= min_hi, detail);
    }
}

void superlinear_passage(Ctx& cx) {
    auto& c = cx.cfg;
    c.set_default("model.preset", "power_drift");
    c.set_default("model.kappa", "3");
    c.set_default("model.alpha", "2.5");
    set_batch_defaults(c, 4000, 1e-3, 1, 0.01, "1000000");
    c.set_default("passage.level", "10");
    c.set_default("passage.levels", "2, 5, 10, 20, 50, 100");
    c.set_default("passage.factor", "8");
    c.set_default("passage.max_tail", "0.05");
    c.set_default("passage.median_factor", "2");
    c.check_known(concat({{"scenario", "seed"}, kModelKeys, kBatchKeys, kCertifyKeys,
                          {"passage.level", "passage.levels", "passage.factor", "passage.max_tail",
                           "passage.median_factor"}}));
    const auto model = build_model(c);
    default_certify_p(c, model);
    certify_step(cx, model);
    const double beta = model.value("beta"), kappa = model.value("kappa");
    if (!(kappa > 1.0)) throw ConfigError("superlinear-passage needs kappa > 1");
    const double R = c.num("passage.level");
    auto levels = c.nums("passage.levels");
    if (std::find(levels.begin(), levels.end(), R) == levels.end()) levels.push_back(R);
    std::sort(levels.begin(), levels.end());

    SimulationGrid grid = make_grid(c);
    for (double level : levels) grid.watches.push_back({level, 0.0});
    const auto batch = simulate_batch(model, grid, fixed_start(start_point(c, model)), n_paths(c), cx.seed(), {},
                                      cx.workers());
    CsvTable t({"R", "t_R", "median", "q90", "p_beyond_factor", "censored_fraction"});
    std::vector<double> medians, oracle;
    const double factor = c.num("passage.factor");
    for (double level : levels) {
        const double tR = relaxation_passage_time(beta, kappa, level);
        PassageRequest req;
        req.tail_thresholds = {factor * tR};
        const auto st = estimate_passage_moments(batch, level, 0.0, req);
        const double med = st.quantile(0.5);
        const auto& beyond = st.tails.front().probability;
        t.add_row({num(level), num(tR), num(med), num(st.quantile(0.9)), num(beyond.value), num(st.censored_fraction())});
        medians.push_back(med);
        oracle.push_back(tR);
        if (level == R) {
            cx.check("tail-beyond-" + num(factor) + "tR", "superlinear-passage", beyond.value <= c.num("passage.max_tail"),
                     "P(delta>" + num(factor * tR) + ")=" + num(beyond.value) + " t_R=" + num(tR));
            const double mf = c.num("passage.median_factor");
            cx.check("median-within-" + num(mf) + "x", "superlinear-passage", med >= tR / mf && med <= tR * mf,
                     "median=" + num(med) + " t_R=" + num(tR));
        }
    }
    cx.csv("superlinear_passage.csv", t);
    PlotSpec spec;
    spec.title = "median passage time below R";
    spec.x_label = "R";
    spec.y_label = "time";
    spec.log_x = spec.log_y = true;
    auto emp = curve("median delta_R", levels, medians);
    auto ode = curve("R^{1-kappa}/(beta(kappa-1))", levels, oracle);
    ode.dashed = true;
    ode.markers = false;
    spec.series = {emp, ode};
    cx.plot("superlinear_passage", spec);
}

void diffusion_critical(Ctx& cx) {
    auto& c = cx.cfg;
    c.set_default("model.preset", "gradient_diffusion");
    c.set_default("model.beta", "2");
    c.set_default("model.sigma2", "1");
    c.set_default("certify.p", "3");
    set_batch_defaults(c, 1000, 1e-3, 1000, 1, "0");
    const double horizon = c.num("batch.horizon");
    c.set_default("estimator.order", "2");
    c.set_default("estimator.burn_in", num(horizon / 10.0));
    c.set_default("estimator.max_se", "4");
    c.set_default("estimator.divergent_orders", "3.2");
    c.set_default("estimator.windows", list({horizon / 8.0, horizon / 4.0, horizon / 2.0, horizon}));
    c.check_known(concat({{"scenario", "seed"}, kModelKeys, kBatchKeys, kCertifyKeys,
                          {"estimator.order", "estimator.burn_in", "estimator.max_se", "estimator.divergent_orders",
                           "estimator.windows"}}));
    const auto model = build_model(c);
    if (model.preset != Preset::gradient_diffusion) throw ConfigError("diffusion-critical needs model.preset = gradient_diffusion");
    certify_step(cx, model);
    const double beta = c.num("model.beta"), sigma2 = c.num("model.sigma2");

    const auto grid = make_grid(c);
    const auto batch = simulate_batch(model, grid, fixed_start(start_point(c, model)), n_paths(c), cx.seed(), {},
                                      cx.workers());
    const double order = c.num("estimator.order");
    const double burn = c.num("estimator.burn_in");
    const auto emp = estimate_cesaro(batch, burn, horizon, order);
    const auto oracle = diffusion_stationary_moment(beta, sigma2, order);
    const double max_se = c.num("estimator.max_se");
    CsvTable s({"order", "time_average", "se", "oracle", "oracle_infinite", "z"});
    const double z = emp.se > 0.0 ? (emp.value - oracle.value) / emp.se : 0.0;
    s.add_row({num(order), num(emp.value), num(emp.se), num(oracle.value), format_bool(oracle.infinite), num(z)});
    cx.csv("stationary_moment.csv", s);
    cx.check("stationary-moment-" + order_tag(order), "critical-stationary-moment",
             !oracle.infinite && !oracle.ill_conditioned && std::abs(emp.value - oracle.value) <= max_se * emp.se,
             "time-average=" + num(emp.value) + " se=" + num(emp.se) + " oracle=" + num(oracle.value));
    divergence_checks(cx, batch, model, c.nums("estimator.divergent_orders"), c.nums("estimator.windows"),
                      "critical-threshold");

    // Occupation histogram after burn-in against the stationary density.
    constexpr double lo = -10.0, hi = 10.0, width = 0.5;
    const int bins = static_cast<int>((hi - lo) / width);
    std::vector<double> counts(bins, 0.0);
    double total = 0.0;
    for (const auto& p : batch.paths) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (p.times[i] < burn) continue;
            total += 1.0;
            const double x = p.state(i)[0];
            if (x < lo || x >= hi) continue;
            counts[static_cast<int>((x - lo) / width)] += 1.0;
        }
    }
    std::vector<double> centers, density, rho;
    CsvTable h({"x", "empirical_density", "rho"});
    for (int b = 0; b < bins; ++b) {
        const double x = lo + (b + 0.5) * width;
        centers.push_back(x);
        density.push_back(total > 0.0 ? counts[b] / (total * width) : 0.0);
        rho.push_back(diffusion_stationary_density(beta, sigma2, x).value);
        h.add_row({num(x), num(density.back()), num(rho.back())});
    }
    cx.csv("stationary_density.csv", h);
    PlotSpec spec;
    spec.title = "occupation density vs stationary density";
    spec.x_label = "x";
    spec.y_label = "density";
    auto e = curve("empirical", centers, density);
    e.line = false;
    auto r = curve("rho", centers, rho);
    r.dashed = true;
    r.markers = false;
    spec.series = {e, r};
    cx.plot("stationary_density", spec);
}

void lorenz84(Ctx& cx) {
    auto& c = cx.cfg;
    c.set_default("model.preset", "lorenz84");
    c.set_default("model.a", "0.25");
    c.set_default("model.b", "4");
    c.set_default("model.c", "1");
    c.set_default("model.gamma", "0");
    c.set_default("model.alpha", "1.5");
    const double alpha = c.num("model.alpha");
    c.set_default("certify.p", num(0.95 * alpha));
    c.set_default("estimator.order", num(0.9 * alpha));
    set_batch_defaults(c, 2000, 1e-3, 50, 0.5, "1, 1, 1");
    c.set_default("estimator.t_min", num(c.num("batch.horizon") / 4.0));
    c.check_known(concat({{"scenario", "seed"}, kModelKeys, kBatchKeys, kCertifyKeys,
                          {"estimator.order", "estimator.t_min"}}));
    const auto model = build_model(c);
    if (model.preset != Preset::lorenz84) throw ConfigError("lorenz84 needs model.preset = lorenz84");
    const auto cert = certify_step(cx, model);
    const bool diss = cert.dissipativity && cert.dissipativity->pass;
    cx.check("dissipativity", "lorenz84-dissipativity", diss,
             "kappa=" + num(cert.params.kappa) + " beta=" + num(cert.params.beta) + " worst_margin=" +
                 (cert.dissipativity ? num(cert.dissipativity->worst_margin) : std::string("n/a")));

    const auto grid = make_grid(c);
    const auto batch = simulate_batch(model, grid, fixed_start(start_point(c, model)), n_paths(c), cx.seed(), {},
                                      cx.workers());
    const double order = c.num("estimator.order");
    const double boundary = alpha;
    const auto times = retained_times(grid, 0.0, grid.horizon);
    moment_artifacts(cx, estimate_moments(batch, times, std::vector<double>{order}, boundary), {order}, false);
    bounded_checks(cx, batch, {order}, c.num("estimator.t_min"), boundary, "moment-bound", false);
}

void lyapunov_certify(Ctx& cx) {
    auto& c = cx.cfg;
    c.set_default("model.preset", "storage");
    if (c.str("model.preset") == "storage") {
        c.set_default("model.alpha", "2.5");
        c.set_default("model.kappa", "0");
    }
    c.check_known(concat({{"scenario", "seed"}, kModelKeys, kCertifyKeys}));
    const auto model = build_model(c);
    default_certify_p(c, model);
    const double p = c.num("certify.p");
    const auto out = certify_model(model, p, c.num("certify.c_V", 0.0));
    cx.text("certificate.txt", render_kv(out.to_kv()));
    if (out.lyapunov && !out.lyapunov->radii.empty()) {
        const auto& L = *out.lyapunov;
        CsvTable t({"radius", "max_h", "C_V"});
        for (std::size_t i = 0; i < L.radii.size(); ++i) t.add_row({num(L.radii[i]), num(L.shell_max_h[i]), num(L.profile.C_V)});
        cx.csv("lyapunov_shells.csv", t);
        std::vector<double> r, h, cv;
        for (std::size_t i = 0; i < L.radii.size(); ++i) {
            if (L.radii[i] <= 0.0) continue;
            r.push_back(L.radii[i]);
            h.push_back(L.shell_max_h[i]);
            cv.push_back(L.profile.C_V);
        }
        PlotSpec spec;
        spec.title = "max over shell of aV + c_V V^gamma";
        spec.x_label = "|x|";
        spec.y_label = "h";
        spec.log_x = true;
        auto hs = curve("h", r, h);
        auto cs = curve("C_V", r, cv);
        cs.dashed = true;
        cs.markers = false;
        spec.series = {hs, cs};
        cx.plot("lyapunov_shells", spec);
    }
    cx.check("lyapunov-condition", "lyapunov-condition", out.pass,
             out.pass ? "C_V=" + num(out.lyapunov->profile.C_V) + " c_V=" + num(out.lyapunov->profile.c_V) +
                            " worst_margin=" + num(out.lyapunov->worst_margin)
                      : out.failure);
    if (!out.pass) throw CertificationError("certification failed: " + out.failure);
}

void oracle_dump(Ctx& cx) {
    auto& c = cx.cfg;
    c.set_default("oracle.formula", "f_inf");
    const std::string formula = c.str("oracle.formula");
    c.check_known(concat({{"scenario", "seed"}, kModelKeys,
                          {"oracle.formula", "oracle.R", "oracle.t", "oracle.q", "oracle.x", "oracle.p", "oracle.kappa",
                           "oracle.C_V", "oracle.c_V", "oracle.upsilon0"}}));
    const std::vector<double> R_grid = {1.5, 2, 3, 5, 10, 20, 50, 100, 200, 500, 1000};
    std::vector<std::string> input_names;
    std::vector<std::vector<double>> inputs;
    std::vector<OracleResult> results;
    auto emit = [&](std::vector<double> in, OracleResult r) {
        inputs.push_back(std::move(in));
        results.push_back(std::move(r));
    };
    if (formula == "f_t" || formula == "f_inf") {
        c.set_default("model.alpha", "2");
        c.set_default("model.kappa", "0");
        const double a = c.num("model.alpha"), k = c.num("model.kappa");
        const auto Rs = c.nums("oracle.R", R_grid);
        if (formula == "f_t") {
            c.set_default("oracle.t", "10");
            input_names = {"t", "R"};
            for (double t : c.nums("oracle.t"))
                for (double R : Rs) emit({t, R}, storage_tail_lower_bound(a, k, t, R));
        } else {
            input_names = {"R"};
            for (double R : Rs) emit({R}, storage_tail_lower_bound_limit(a, k, R));
        }
    } else if (formula == "c_kappa") {
        c.set_default("oracle.kappa", "-1, -0.5, 0, 0.5, 0.9");
        input_names = {"kappa"};
        for (double k : c.nums("oracle.kappa")) {
            OracleResult r;
            r.formula = Formula::c_kappa;
            r.value = storage_c_kappa(k);
            r.inputs = {{"kappa", num(k)}};
            emit({k}, r);
        }
    } else if (formula == "moment_lower_bound") {
        c.set_default("model.alpha", "2.5");
        c.set_default("model.kappa", "0");
        c.set_default("oracle.t", "10, 100, inf");
        c.set_default("oracle.q", "0.5, 1, 1.4, 1.6, 2");
        input_names = {"t", "q"};
        for (double t : c.nums("oracle.t"))
            for (double q : c.nums("oracle.q"))
                emit({t, q}, storage_moment_lower_bound(c.num("model.alpha"), c.num("model.kappa"), t, q));
    } else if (formula == "rho" || formula == "rho_moment") {
        c.set_default("model.beta", "2");
        c.set_default("model.sigma2", "1");
        const double b = c.num("model.beta"), s2 = c.num("model.sigma2");
        if (formula == "rho") {
            c.set_default("oracle.x", "-10, -5, -2, -1, 0, 1, 2, 5, 10");
            input_names = {"x"};
            for (double x : c.nums("oracle.x")) emit({x}, diffusion_stationary_density(b, s2, x));
        } else {
            c.set_default("oracle.p", "0.5, 1, 1.5, 2, 2.5, 2.9, 2.97, 3, 3.5");
            input_names = {"p"};
            for (double p : c.nums("oracle.p")) emit({p}, diffusion_stationary_moment(b, s2, p));
        }
    } else if (formula == "ode_relax") {
        c.set_default("model.beta", "1");
        c.set_default("model.kappa", "2");
        c.set_default("oracle.t", "0.01, 0.1, 0.5, 1, 2, 5, 10");
        input_names = {"t"};
        for (double t : c.nums("oracle.t")) emit({t}, ode_relaxation(c.num("model.beta"), c.num("model.kappa"), t));
    } else if (formula == "upsilon_gamma1") {
        c.set_default("oracle.C_V", "1");
        c.set_default("oracle.c_V", "0.5");
        c.set_default("oracle.upsilon0", "10");
        c.set_default("oracle.t", "0, 0.5, 1, 2, 5, 10, 20");
        input_names = {"t"};
        for (double t : c.nums("oracle.t")) {
            emit({t}, upsilon_gamma1_closed_form(c.num("oracle.C_V"), c.num("oracle.c_V"), c.num("oracle.upsilon0"), t));
        }
    } else {
        throw ConfigError("unknown oracle.formula '" + formula + "'");
    }
    auto header = input_names;
    for (const char* h : {"value", "infinite", "ill_conditioned", "error"}) header.emplace_back(h);
    CsvTable t(header);
    for (std::size_t i = 0; i < results.size(); ++i) {
        std::vector<std::string> row;
        for (double v : inputs[i]) row.push_back(num(v));
        const auto& r = results[i];
        row.push_back(r.ill_conditioned ? "" : num(r.value));
        row.push_back(format_bool(r.infinite));
        row.push_back(format_bool(r.ill_conditioned));
        row.push_back(num(r.error));
        t.add_row(row);
    }
    cx.csv("oracle_" + formula + ".csv", t);
    // Plot value against the last input column.
    std::vector<double> x, y;
    bool positive_x = true;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (results[i].infinite || results[i].ill_conditioned) continue;
        x.push_back(inputs[i].back());
        y.push_back(results[i].value);
        positive_x = positive_x && x.back() > 0.0;
    }
    if (!x.empty()) {
        PlotSpec spec;
        spec.title = "oracle " + formula;
        spec.x_label = input_names.back();
        spec.y_label = formula;
        spec.log_x = positive_x;
        auto s = curve(formula, x, y);
        s.line = input_names.size() == 1;
        spec.series = {s};
        cx.plot("oracle_" + formula, spec);
    }
}

// --- plain commands -----------------------------------------------------------

void plain_simulate(Ctx& cx) {
    auto& c = cx.cfg;
    set_batch_defaults(c, 100, 1e-3, 10, 0.1, "0");
    c.set_default("model.preset", "storage");
    c.set_default("model.alpha", "2.5");
    c.set_default("model.kappa", "0");
    c.set_default("output.paths", "10");
    c.check_known(concat({{"scenario", "seed", "output.paths"}, kModelKeys, kBatchKeys}));
    const auto model = build_model(c);
    const auto grid = make_grid(c);
    const auto batch = simulate_batch(model, grid, fixed_start(start_point(c, model)), n_paths(c), cx.seed(), {},
                                      cx.workers());
    std::vector<std::string> header = {"path", "t"};
    for (int i = 0; i < model.dimension; ++i) header.push_back("x" + std::to_string(i));
    CsvTable t(header);
    const auto keep = std::min<std::size_t>(batch.paths.size(), static_cast<std::size_t>(c.integer("output.paths", 10)));
    for (std::size_t k = 0; k < keep; ++k) {
        const auto& p = batch.paths[k];
        for (std::size_t i = 0; i < p.size(); ++i) {
            std::vector<std::string> row = {std::to_string(k), num(p.times[i])};
            for (double v : p.state(i)) row.push_back(num(v));
            t.add_row(row);
        }
    }
    cx.csv("paths.csv", t);
    CsvTable s({"path", "exploded", "exploded_at", "clamp_events", "final_norm"});
    for (std::size_t k = 0; k < batch.paths.size(); ++k) {
        const auto& p = batch.paths[k];
        s.add_row({std::to_string(k), format_bool(p.exploded), p.exploded_at ? num(*p.exploded_at) : "",
                   std::to_string(p.clamp_events), num(p.norm_at(p.size() - 1))});
    }
    cx.csv("path_summary.csv", s);
}

void plain_moments(Ctx& cx) {
    auto& c = cx.cfg;
    set_batch_defaults(c, 1000, 1e-3, 10, 0.5, "0");
    c.set_default("model.preset", "storage");
    c.set_default("model.alpha", "2.5");
    c.set_default("model.kappa", "0");
    c.set_default("estimator.orders", "1");
    c.check_known(concat({{"scenario", "seed", "estimator.orders", "estimator.times", "estimator.boundary"}, kModelKeys,
                          kBatchKeys}));
    const auto model = build_model(c);
    const auto grid = make_grid(c);
    const auto batch = simulate_batch(model, grid, fixed_start(start_point(c, model)), n_paths(c), cx.seed(), {},
                                      cx.workers());
    const auto orders = c.nums("estimator.orders");
    const auto times = c.nums("estimator.times", retained_times(grid, 0.0, grid.horizon));
    const double boundary = c.num("estimator.boundary", tail_exponent(model));
    moment_artifacts(cx, estimate_moments(batch, times, orders, boundary), orders, false);
}

void plain_passage(Ctx& cx) {
    auto& c = cx.cfg;
    set_batch_defaults(c, 1000, 1e-3, 50, 0.1, "10");
    c.set_default("model.preset", "storage");
    c.set_default("model.alpha", "2.5");
    c.set_default("model.kappa", "0.5");
    c.set_default("passage.level", "2");
    c.set_default("passage.after", "0");
    c.set_default("passage.orders", "1");
    c.check_known(concat({{"scenario", "seed", "passage.level", "passage.after", "passage.orders", "passage.rate",
                           "passage.thresholds"},
                          kModelKeys, kBatchKeys}));
    const auto model = build_model(c);
    auto grid = make_grid(c);
    const double R = c.num("passage.level"), after = c.num("passage.after");
    grid.watches = {{R, after}};
    const auto batch = simulate_batch(model, grid, fixed_start(start_point(c, model)), n_paths(c), cx.seed(), {},
                                      cx.workers());
    PassageRequest req;
    req.orders = c.nums("passage.orders");
    if (c.has("passage.rate")) req.exp_rate = c.num("passage.rate");
    req.tail_thresholds = c.nums("passage.thresholds", {});
    const auto st = estimate_passage_moments(batch, R, after, req);
    cx.text("passage.txt", render_kv(st.to_kv()));
    CsvTable t({"path", "delta"});
    std::size_t k = 0;
    for (const auto& p : batch.paths) {
        const auto& hit = p.passages.front();
        t.add_row({std::to_string(k++), hit ? num(std::max(0.0, *hit - after)) : "censored"});
    }
    cx.csv("passage_times.csv", t);
}

using Runner = std::function<void(Ctx&)>;

Runner runner_for(const std::string& task) {
    static const std::vector<std::pair<std::string, Runner>> table = {
        {"sublinear-moments", sublinear_moments},
        {"linear-exponential-passage", linear_exponential_passage},
        {"superlinear-uniform", superlinear_uniform},
        {"superlinear-passage", superlinear_passage},
        {"storage-optimality", storage_optimality},
        {"diffusion-critical", diffusion_critical},
        {"lorenz84", lorenz84},
        {"lyapunov-certify", lyapunov_certify},
        {"oracle-dump", oracle_dump},
        {"simulate", plain_simulate},
        {"moments", plain_moments},
        {"passage", plain_passage},
    };
    for (const auto& [name, fn] : table)
        if (name == task) return fn;
    return {};
}

std::string render_summary(const RunResult& r) {
    std::string s = "task " + r.task + "\n";
    if (r.certification_waived) s += "certification waived\n";
    for (const auto& c : r.checks) s += c.render() + "\n";
    s += "exit " + std::to_string(r.exit_code) + (r.failure.empty() ? "" : " " + r.failure) + "\n";
    return s;
}

void write_manifest(Ctx& cx) {
    auto& r = cx.res;
    json m;
    m["tool"] = "lyapsim";
    m["version"] = kVersion;
    m["task"] = r.task;
    m["generator"] = kGeneratorName;
    m["seed"] = cx.cfg.integer("seed", 1);
    m["waive_certify"] = cx.opt.waive_certify;
    m["config"] = cx.cfg.canonical();
    m["exit_code"] = r.exit_code;
    m["failure"] = r.failure;
    json checks = json::array();
    for (const auto& c : r.checks) checks.push_back({{"id", c.id}, {"theorem", c.theorem}, {"pass", c.pass}});
    m["checks"] = checks;
    json arts = json::array();
    for (const auto& a : r.artifacts) {
        const auto full = cx.opt.out_dir / a;
        if (fs::exists(full)) arts.push_back({{"path", a.generic_string()}, {"sha256", sha256_file(full)}});
    }
    m["artifacts"] = arts;
    r.manifest = cx.opt.out_dir / "manifest.json";
    write_text(r.manifest, m.dump(2) + "\n");
}

}  // namespace

std::string to_string(ScenarioId id) {
    for (const auto& [s, name] : kScenarioNames)
        if (s == id) return name;
    return "?";
}

std::optional<ScenarioId> parse_scenario(const std::string& name) {
    for (const auto& [s, n] : kScenarioNames)
        if (name == n) return s;
    return std::nullopt;
}

const std::vector<ScenarioId>& all_scenarios() {
    static const std::vector<ScenarioId> ids = [] {
        std::vector<ScenarioId> v;
        for (const auto& [s, n] : kScenarioNames) v.push_back(s);
        return v;
    }();
    return ids;
}

std::string theorem_tag(ScenarioId id) {
    switch (id) {
        case ScenarioId::sublinear_moments: return "moment-bound";
        case ScenarioId::linear_exponential_passage: return "passage-time-exponential";
        case ScenarioId::superlinear_uniform: return "superlinear-moment-bound";
        case ScenarioId::superlinear_passage: return "superlinear-passage";
        case ScenarioId::storage_optimality: return "tail-lower-bound";
        case ScenarioId::diffusion_critical: return "critical-stationary-moment";
        case ScenarioId::lorenz84: return "lorenz84-dissipativity";
        case ScenarioId::lyapunov_certify: return "lyapunov-condition";
        case ScenarioId::oracle_dump: return "oracle";
    }
    return "?";
}

std::string CheckLine::render() const {
    return std::string(pass ? "PASS " : "FAIL ") + id + " [" + theorem + "] " + detail;
}

const CheckLine* RunResult::find(const std::string& id) const {
    for (const auto& c : checks)
        if (c.id == id) return &c;
    return nullptr;
}

bool is_task(const std::string& name) { return static_cast<bool>(runner_for(name)); }

ModelSpec build_model(const Config& c) {
    const std::string preset = c.str("model.preset");
    try {
        if (preset == "storage") {
            return make_storage(c.num("model.kappa"), c.num("model.alpha"),
                                parse_convention(c.str("model.convention", "truncated")));
        }
        if (preset == "lorenz84") {
            return make_lorenz84(c.num("model.a", 0.25), c.num("model.b", 4.0), c.num("model.c", 1.0),
                                 c.num("model.gamma", 0.0), c.num("model.alpha", 1.5), c.num("model.r0", 1.0), c.num("model.noise_scale", 1.0));
        }
        if (preset == "gradient_diffusion") {
            return make_gradient_diffusion(c.num("model.beta"), std::sqrt(c.num("model.sigma2")));
        }
        if (preset == "linear_ou") {
            return make_linear_ou(c.num("model.beta", 1.0), c.num("model.sigma", 0.0), c.num("model.alpha", 0.0),
                                  c.num("model.mass", 1.0), static_cast<int>(c.integer("model.dimension", 1)));
        }
        if (preset == "power_drift") {
            return make_power_drift(c.num("model.beta", 1.0), c.num("model.kappa"), c.num("model.alpha", 0.0),
                                    c.num("model.mass", 1.0), parse_direction(c.str("model.direction", "isotropic")),
                                    parse_convention(c.str("model.convention", "truncated")), c.num("model.sigma", 0.0),
                                    static_cast<int>(c.integer("model.dimension", 1)));
        }
    } catch (const DomainError& e) {
        throw ConfigError(std::string("model: ") + e.what());
    } catch (const DivergenceError& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
    throw ConfigError("unknown model.preset '" + preset + "'");
}

KeyValues CertificationOutcome::to_kv() const {
    KeyValues kv = {{"pass", format_bool(pass)}, {"failure", failure}};
    append_kv(kv, "params", params.to_kv());
    if (exponents) append_kv(kv, "exponents", exponents->to_kv());
    if (dissipativity) append_kv(kv, "dissipativity", dissipativity->to_kv());
    if (kernel) append_kv(kv, "kernel", kernel->to_kv());
    if (lyapunov) append_kv(kv, "lyapunov", lyapunov->to_kv());
    return kv;
}

CertificationOutcome certify_model(const ModelSpec& model, double p, double c_V, const QuadratureOptions& quadrature) {
    CertificationOutcome out;
    auto fail = [&](const std::string& what) {
        if (out.failure.empty()) out.failure = what;
    };
    try {
        out.params = preset_params(model, p);
        out.params.validate(model.dimension);
        out.exponents = exponent_report(out.params);
    } catch (const Error& e) {
        fail(std::string("exponents: ") + e.what());
        return out;
    }
    try {
        std::vector<double> radii;
        for (int k = 0; k < 12; ++k) radii.push_back(out.params.r0 * std::pow(1e4, k / 11.0));
        const int dirs = model.dimension == 1 ? 2 : (model.dimension == 2 ? 8 : 16);
        out.dissipativity = verify_dissipativity(model, out.params, radii, dirs);
        if (!out.dissipativity->pass) fail("dissipativity margin " + num(out.dissipativity->worst_margin) + " < 0");
    } catch (const Error& e) {
        fail(std::string("dissipativity: ") + e.what());
    }
    try {
        out.kernel = verify_kernel_bounds(model.kernel, out.params, quadrature);
        if (!out.kernel->pass) fail("kernel bounds");
    } catch (const Error& e) {
        fail(std::string("kernel: ") + e.what());
    }
    try {
        out.lyapunov = certify_L_condition(model, out.params, CertificationGrid::standard(out.params.r0, model.dimension),
                                           c_V, quadrature);
        if (!out.lyapunov->pass) fail("Lyapunov condition: " + out.lyapunov->reason);
    } catch (const Error& e) {
        fail(std::string("Lyapunov condition: ") + e.what());
    }
    out.pass = out.failure.empty();
    return out;
}

RunResult run_task(const std::string& task, Config config, const RunOptions& options) {
    RunResult res;
    res.task = task;
    Ctx cx{task, std::move(config), options, res};
    const auto runner = runner_for(task);
    try {
        if (!runner) throw ConfigError("unknown task '" + task + "'");
        if (cx.cfg.has("scenario") && cx.cfg.str("scenario") != task) {
            throw ConfigError("config is for '" + cx.cfg.str("scenario") + "', not '" + task + "'");
        }
        cx.cfg.set("scenario", task);
        fs::create_directories(options.out_dir);
        runner(cx);
        for (const auto& c : res.checks) {
            if (!c.pass) {
                res.exit_code = kExitAcceptance;
                res.failure = "check " + c.id + " failed";
                break;
            }
        }
    } catch (const ConfigError& e) {
        res.exit_code = kExitConfig;
        res.failure = e.what();
    } catch (const CertificationError& e) {
        res.exit_code = kExitCertification;
        res.failure = e.what();
    } catch (const Error& e) {
        res.exit_code = kExitAcceptance;
        res.failure = e.what();
    }
    if (res.exit_code == kExitConfig && !fs::exists(options.out_dir)) return res;
    try {
        cx.text("summary.txt", render_summary(res));
        cx.text("config.txt", cx.cfg.canonical());
        write_manifest(cx);
    } catch (const Error& e) {
        if (res.exit_code == kExitPass) res.exit_code = kExitAcceptance;
        if (res.failure.empty()) res.failure = e.what();
    }
    return res;
}

RunResult run_scenario(ScenarioId id, Config config, const RunOptions& options) {
    return run_task(to_string(id), std::move(config), options);
}

ReplayResult replay_manifest(const fs::path& manifest, const fs::path& out_dir, unsigned workers) {
    json m;
    try {
        m = json::parse(read_text(manifest));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("manifest: ") + e.what());
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    if (!m.contains("task") || !m.contains("config") || !m.contains("artifacts")) {
        throw ConfigError("manifest: missing task, config or artifacts");
    }
    RunOptions opt;
    opt.out_dir = out_dir;
    opt.workers = workers;
    opt.waive_certify = m.value("waive_certify", false);
    ReplayResult out;
    out.rerun = run_task(m["task"].get<std::string>(), Config::parse(m["config"].get<std::string>()), opt);
    for (const auto& a : m["artifacts"]) {
        const auto rel = a["path"].get<std::string>();
        const auto full = out_dir / rel;
        if (!fs::exists(full) || sha256_file(full) != a["sha256"].get<std::string>()) out.mismatches.push_back(rel);
    }
    out.identical = out.mismatches.empty();
    return out;
}

}  // namespace lyapsim
