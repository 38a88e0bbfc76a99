#include "lyapsim/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "lyapsim/errors.hpp"
#include "lyapsim/oracles.hpp"

namespace lyapsim {

namespace {

double time_tolerance(double t) { return 1e-9 * std::max(1.0, std::abs(t)); }

bool alive_at(const Path& p, double t) { return !(p.exploded && *p.exploded_at <= t + time_tolerance(t)); }

double state_norm_at(const Path& p, double t) {
    const auto idx = p.index_of(t, time_tolerance(t));
    if (!idx) throw DomainError("time " + format_number(t) + " is not a retained grid time");
    return p.norm_at(*idx);
}

double t_quantile(double dof) {
    if (dof < 1.0) return kZ95;
    return boost::math::quantile(boost::math::students_t(dof), 0.975);
}

double ols_slope(std::span<const double> x, std::span<const double> y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

double safe_log(double v) { return std::log(std::max(v, 1e-300)); }

// Slope of log(mean over paths) against log_x, CI from per-block slopes.
TrendSlope block_trend(const std::vector<std::vector<double>>& per_path, const std::vector<double>& log_x) {
    if (per_path.empty()) throw EstimationError("no usable paths for a trend");
    if (log_x.size() < 2) throw DomainError("a trend needs at least two abscissae");
    const std::size_t k = log_x.size();
    auto slope_of = [&](std::size_t begin, std::size_t end) {
        std::vector<double> y(k, 0.0);
        for (std::size_t i = begin; i < end; ++i)
            for (std::size_t j = 0; j < k; ++j) y[j] += per_path[i][j];
        for (auto& v : y) v = safe_log(v / static_cast<double>(end - begin));
        return ols_slope(log_x, y);
    };
    TrendSlope t;
    t.slope = slope_of(0, per_path.size());
    const std::size_t n = per_path.size();
    const std::size_t blocks = std::min<std::size_t>(kMomBlocks, n);
    if (blocks < 2) {
        t.lo = t.hi = t.slope;
        return t;
    }
    std::vector<double> slopes;
    for (std::size_t b = 0; b < blocks; ++b) slopes.push_back(slope_of(b * n / blocks, (b + 1) * n / blocks));
    const auto est = mean_estimate(slopes);
    // Rounding slack so that exactly flat deterministic batches count as flat.
    const double hw = t_quantile(static_cast<double>(blocks - 1)) * est.se + 1e-12;
    t.lo = t.slope - hw;
    t.hi = t.slope + hw;
    return t;
}

}  // namespace

Estimate mean_estimate(std::span<const double> sample) {
    Estimate e;
    const std::size_t n = sample.size();
    if (n == 0) throw EstimationError("empty sample");
    e.value = std::accumulate(sample.begin(), sample.end(), 0.0) / static_cast<double>(n);
    if (n > 1) {
        double ss = 0.0;
        for (double v : sample) ss += (v - e.value) * (v - e.value);
        e.se = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
    }
    e.half_width = kZ95 * e.se;
    return e;
}

Estimate median_of_means(std::span<const double> sample, int blocks) {
    const std::size_t n = sample.size();
    if (n == 0) throw EstimationError("empty sample");
    const std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(std::max(blocks, 1)), n);
    std::vector<double> means;
    for (std::size_t i = 0; i < b; ++i) {
        const std::size_t lo = i * n / b, hi = (i + 1) * n / b;
        means.push_back(std::accumulate(sample.begin() + lo, sample.begin() + hi, 0.0) / static_cast<double>(hi - lo));
    }
    const auto spread = mean_estimate(means);
    std::sort(means.begin(), means.end());
    Estimate e;
    e.value = b % 2 ? means[b / 2] : 0.5 * (means[b / 2 - 1] + means[b / 2]);
    // Asymptotic standard error of a median of b normal block means.
    e.se = std::sqrt(std::numbers::pi / 2.0) * spread.se;
    e.half_width = kZ95 * e.se;
    return e;
}

const MomentRow& MomentReport::at(double time, double order) const {
    for (const auto& r : rows)
        if (std::abs(r.time - time) <= time_tolerance(time) && r.order == order) return r;
    throw DomainError("no moment row at t=" + format_number(time) + ", order=" + format_number(order));
}

CsvTable MomentReport::to_csv() const {
    CsvTable t({"time", "order", "mean", "mean_hw", "mom", "mom_hw", "headline", "headline_hw", "n_used", "exploded"});
    for (const auto& r : rows) {
        t.add_row({format_number(r.time), format_number(r.order), format_number(r.mean.value),
                   format_number(r.mean.half_width), format_number(r.mom.value), format_number(r.mom.half_width),
                   format_number(r.headline().value), format_number(r.headline().half_width),
                   std::to_string(r.n_used), std::to_string(r.exploded)});
    }
    return t;
}

MomentReport estimate_moments(const PathBatch& batch, std::span<const double> times, std::span<const double> orders,
                              double finiteness_boundary) {
    MomentReport rep;
    rep.n_paths = batch.paths.size();
    rep.exploded = batch.exploded();
    for (double o : orders)
        if (!(o > 0.0)) throw DomainError("moment orders must be positive");
    std::vector<double> norms, sample;
    for (double t : times) {
        if (t < 0.0 || t > batch.grid.horizon + time_tolerance(t)) throw DomainError("time outside the horizon");
        norms.clear();
        std::size_t exploded = 0;
        for (const auto& p : batch.paths) {
            if (!alive_at(p, t)) {
                ++exploded;
                continue;
            }
            norms.push_back(state_norm_at(p, t));
        }
        if (norms.empty()) throw EstimationError("every path exploded before t=" + format_number(t));
        for (double o : orders) {
            sample.resize(norms.size());
            for (std::size_t i = 0; i < norms.size(); ++i) sample[i] = std::pow(norms[i], o);
            MomentRow row;
            row.time = t;
            row.order = o;
            row.mean = mean_estimate(sample);
            row.mom = median_of_means(sample);
            row.headline_is_mom = std::abs(finiteness_boundary - o) <= 0.5;
            row.n_used = norms.size();
            row.exploded = exploded;
            rep.rows.push_back(row);
        }
    }
    return rep;
}

std::vector<double> retained_times(const SimulationGrid& grid, double lo, double hi) {
    std::vector<double> out;
    const std::size_t steps = grid.steps();
    const auto every = static_cast<std::size_t>(grid.record_every);
    for (std::size_t k = 0; k <= steps; ++k) {
        if (k % every != 0 && k != steps) continue;
        const double t = grid.time_at(k);
        if (t >= lo - time_tolerance(lo) && t <= hi + time_tolerance(hi)) out.push_back(t);
    }
    return out;
}

TrendSlope moment_trend(const PathBatch& batch, std::span<const double> times, double order) {
    std::vector<double> log_t;
    for (double t : times) {
        if (!(t > 0.0)) throw DomainError("trend times must be positive");
        log_t.push_back(std::log(t));
    }
    std::vector<std::vector<double>> per_path;
    for (const auto& p : batch.paths) {
        if (!alive_at(p, times.back())) continue;
        std::vector<double> row;
        for (double t : times) row.push_back(std::pow(state_norm_at(p, t), order));
        per_path.push_back(std::move(row));
    }
    return block_trend(per_path, log_t);
}

SupMoment estimate_sup_moment(const PathBatch& batch, double t_lo, double t_hi, double order,
                              double finiteness_boundary) {
    if (!(t_lo <= t_hi) || t_hi > batch.grid.horizon + time_tolerance(t_hi)) throw DomainError("window outside horizon");
    const auto times = retained_times(batch.grid, t_lo, t_hi);
    if (times.empty()) throw DomainError("no retained times in the window");
    const double orders[] = {order};
    const auto rep = estimate_moments(batch, times, orders, finiteness_boundary);
    SupMoment s;
    s.per_time = rep.rows;
    s.sup = -std::numeric_limits<double>::infinity();
    for (const auto& r : rep.rows) {
        if (r.headline().value > s.sup) {
            s.sup = r.headline().value;
            s.at_argmax = r.headline();
            s.argmax_time = r.time;
        }
    }
    std::vector<double> positive;
    for (double t : times)
        if (t > 0.0) positive.push_back(t);
    if (positive.size() >= 2) s.trend = moment_trend(batch, positive, order);
    return s;
}

Estimate estimate_cesaro(const PathBatch& batch, double sigma, double t, double order) {
    if (!(sigma < t)) throw DomainError("Cesaro mean needs sigma < t");
    std::vector<double> sample;
    for (const auto& p : batch.paths) {
        if (!alive_at(p, t)) continue;
        double acc = 0.0;
        bool started = false;
        double prev_t = 0.0, prev_v = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double ti = p.times[i];
            if (ti < sigma - time_tolerance(sigma)) continue;
            if (ti > t + time_tolerance(t)) break;
            const double v = std::pow(p.norm_at(i), order);
            if (started) acc += 0.5 * (v + prev_v) * (ti - prev_t);
            started = true;
            prev_t = ti;
            prev_v = v;
        }
        sample.push_back(acc / (t - sigma));
    }
    if (sample.empty()) throw EstimationError("every path exploded before t=" + format_number(t));
    return mean_estimate(sample);
}

double PassageTimeStats::quantile(double q) const {
    if (n_paths == 0) throw EstimationError("no passage sample");
    std::vector<double> all(deltas);
    all.insert(all.end(), censored, std::numeric_limits<double>::infinity());
    std::sort(all.begin(), all.end());
    const auto k = static_cast<std::size_t>(std::clamp(std::ceil(q * static_cast<double>(all.size())) - 1.0, 0.0,
                                                       static_cast<double>(all.size() - 1)));
    return all[k];
}

KeyValues PassageTimeStats::to_kv() const {
    KeyValues kv = {{"level", format_number(level)},
                    {"start", format_number(start)},
                    {"resolution", format_number(resolution)},
                    {"n_paths", std::to_string(n_paths)},
                    {"censored", std::to_string(censored)},
                    {"moments_valid", format_bool(moments_valid)}};
    for (const auto& m : moments) {
        kv.emplace_back("moment.q" + format_number(m.order), format_number(m.estimate.value));
        kv.emplace_back("moment.q" + format_number(m.order) + ".hw", format_number(m.estimate.half_width));
    }
    if (exp_moment) kv.emplace_back("exp_moment.c" + format_number(exp_rate), format_number(exp_moment->value));
    for (const auto& t : tails) kv.emplace_back("tail.gt" + format_number(t.threshold), format_number(t.probability.value));
    return kv;
}

PassageTimeStats estimate_passage_moments(const PathBatch& batch, double R, double sigma, const PassageRequest& request) {
    if (!(R > 0.0)) throw DomainError("passage level must be positive");
    PassageTimeStats st;
    st.level = R;
    st.start = sigma;
    st.resolution = batch.grid.dt;
    st.n_paths = batch.paths.size();
    std::optional<std::size_t> watch;
    for (std::size_t w = 0; w < batch.grid.watches.size(); ++w) {
        const auto& pw = batch.grid.watches[w];
        if (std::abs(pw.level - R) <= 1e-12 * R && std::abs(pw.after - sigma) <= time_tolerance(sigma)) watch = w;
    }
    std::vector<std::optional<double>> delta(batch.paths.size());
    for (std::size_t i = 0; i < batch.paths.size(); ++i) {
        const auto& p = batch.paths[i];
        if (watch) {
            if (p.passages[*watch]) delta[i] = std::max(0.0, *p.passages[*watch] - sigma);
        } else if (const auto pt = detect_passage_time(p, R, sigma)) {
            delta[i] = pt->delta;
        }
        if (delta[i]) {
            st.deltas.push_back(*delta[i]);
        } else {
            ++st.censored;
        }
    }
    st.moments_valid = 2 * st.censored <= st.n_paths;
    const double censor_time = std::max(0.0, batch.grid.horizon - sigma);
    std::vector<double> sample(delta.size());
    auto value = [&](std::size_t i) { return delta[i] ? *delta[i] : censor_time; };
    for (double q : request.orders) {
        for (std::size_t i = 0; i < delta.size(); ++i) sample[i] = std::pow(value(i), q);
        st.moments.push_back({q, mean_estimate(sample)});
    }
    if (request.exp_rate) {
        st.exp_rate = *request.exp_rate;
        for (std::size_t i = 0; i < delta.size(); ++i) sample[i] = std::exp(st.exp_rate * value(i));
        st.exp_moment = mean_estimate(sample);
    }
    for (double c : request.tail_thresholds) {
        for (std::size_t i = 0; i < delta.size(); ++i) sample[i] = (!delta[i] || *delta[i] > c) ? 1.0 : 0.0;
        st.tails.push_back({c, mean_estimate(sample)});
    }
    return st;
}

std::string to_string(TrendVerdict verdict) {
    switch (verdict) {
        case TrendVerdict::bounded: return "bounded";
        case TrendVerdict::growing: return "growing";
        case TrendVerdict::inconclusive: return "inconclusive";
    }
    return "?";
}

DivergenceTest divergence_trend_test(const PathBatch& batch, std::span<const double> windows, double order,
                                     const ModelSpec* model) {
    if (windows.size() < 3) throw DomainError("divergence test needs at least three windows");
    for (std::size_t i = 0; i < windows.size(); ++i) {
        if (!(windows[i] > 0.0) || (i && !(windows[i] > windows[i - 1]))) {
            throw DomainError("windows must be positive and increasing");
        }
    }
    DivergenceTest dt;
    dt.windows.assign(windows.begin(), windows.end());
    std::vector<std::vector<double>> window_times;
    std::vector<double> log_w;
    for (double w : windows) {
        auto ts = retained_times(batch.grid, w / 2.0, w);
        if (ts.empty()) throw DomainError("no retained times in window " + format_number(w));
        window_times.push_back(std::move(ts));
        log_w.push_back(std::log(w));
    }
    std::vector<std::vector<double>> per_path;
    for (const auto& p : batch.paths) {
        if (!alive_at(p, windows.back())) continue;
        std::vector<double> row;
        for (const auto& ts : window_times) {
            double acc = 0.0;
            for (double t : ts) acc += std::pow(state_norm_at(p, t), order);
            row.push_back(acc / static_cast<double>(ts.size()));
        }
        per_path.push_back(std::move(row));
    }
    if (per_path.empty()) throw EstimationError("every path exploded");
    for (std::size_t j = 0; j < windows.size(); ++j) {
        std::vector<double> col;
        for (const auto& r : per_path) col.push_back(r[j]);
        dt.window_estimates.push_back(mean_estimate(col));
    }
    dt.trend = block_trend(per_path, log_w);
    const bool disjoint = dt.window_estimates.back().lo() > dt.window_estimates.front().hi();
    if (dt.trend.lo > 0.0) {
        dt.verdict = disjoint ? TrendVerdict::growing : TrendVerdict::inconclusive;
    } else {
        dt.verdict = TrendVerdict::bounded;
    }
    if (model && model->preset == Preset::storage && model->value("kappa") < 1.0) {
        dt.oracle_lower_bound =
            storage_moment_lower_bound(model->value("alpha"), model->value("kappa"), windows.back(), order).value;
    }
    return dt;
}

}  // namespace lyapsim
