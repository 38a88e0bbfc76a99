#include "lyapsim/integrator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "lyapsim/errors.hpp"

namespace lyapsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

// Drift sub-steps beyond this count mean the state is running away.
constexpr std::size_t kMaxSubsteps = 10'000'000;

}  // namespace

void SimulationGrid::validate() const {
    if (!(dt > 0.0)) throw DomainError("grid step dt must be positive");
    if (!(horizon >= dt)) throw DomainError("grid horizon must be >= dt");
    if (record_every < 1) throw DomainError("record_every must be >= 1");
    if (!(small_jump_epsilon > 0.0 && small_jump_epsilon <= 1.0)) throw DomainError("epsilon must lie in (0,1]");
    if (!(max_relative_drift > 0.0)) throw DomainError("max_relative_drift must be positive");
}

std::size_t SimulationGrid::steps() const {
    return static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
}

double SimulationGrid::time_at(std::size_t k) const {
    return std::min(static_cast<double>(k) * dt, horizon);
}

double TruncationPolicy::threshold() const { return std::pow(R, 1.0 - epsilon); }

void TruncationPolicy::validate() const {
    if (!active) return;
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("truncation epsilon must lie in (0,1)");
    if (!(threshold() > 1.0)) throw DomainError("truncation threshold R^{1-eps} must exceed 1");
}

double Path::norm_at(std::size_t i) const { return norm(state(i)); }

std::optional<std::size_t> Path::index_of(double t, double tolerance) const {
    const auto it = std::lower_bound(times.begin(), times.end(), t - tolerance);
    if (it == times.end() || std::abs(*it - t) > tolerance) return std::nullopt;
    return static_cast<std::size_t>(it - times.begin());
}

Path simulate_path(const ModelSpec& model, const SimulationGrid& grid, std::span<const double> x0,
                   const RandomStream& stream, const TruncationPolicy& truncation) {
    grid.validate();
    truncation.validate();
    const int n = model.dimension;
    const int m = model.noise_dimension;
    if (static_cast<int>(x0.size()) != n) throw DomainError("x0 dimension differs from model dimension");
    for (double v : x0)
        if (!std::isfinite(v)) throw DomainError("x0 must be finite");

    Path path;
    path.stream_id = stream.stream_id();
    path.dimension = n;
    path.passages.assign(grid.watches.size(), std::nullopt);

    RandomStream jump_stream = stream.substream(Lane::large_jumps);
    RandomStream gauss = stream.substream(Lane::gaussian);
    RandomStream small = stream.substream(Lane::small_jumps);

    const std::vector<JumpEvent> jumps =
        grid.scripted_jumps ? *grid.scripted_jumps : sample_large_jumps(model.kernel, grid.horizon, jump_stream);
    const SmallJumpPlan plan = make_small_jump_plan(model.kernel, grid.small_jump_epsilon);

    // The scheme applies large jumps uncompensated, so it runs on A^{<=1}; the
    // compensator of the simulated (eps,1] jumps is a constant drift on top.
    Vec offset(plan.compensator_drift);
    if (model.convention == DriftConvention::compensated) {
        const Vec mean = model.kernel.large_mean();
        for (int i = 0; i < n; ++i) {
            if (!std::isfinite(mean[i])) throw DivergenceError("compensated drift needs a finite jump mean");
            offset[i] -= mean[i];
        }
    }
    bool has_proxy = false;
    for (double v : plan.proxy_variance) has_proxy = has_proxy || v > 0.0;

    Vec x(x0.begin(), x0.end()), x_start(n), a(n), sig(static_cast<std::size_t>(n) * m), xi(m);
    const double threshold = truncation.active ? truncation.threshold() : kInf;
    bool frozen = false;
    bool dead = false;

    auto record = [&](double t) {
        path.times.push_back(t);
        path.states.insert(path.states.end(), x.begin(), x.end());
    };
    auto watch = [&](double t) {
        if (grid.watches.empty()) return;
        const double r = norm(x);
        for (std::size_t w = 0; w < grid.watches.size(); ++w) {
            if (!path.passages[w] && t >= grid.watches[w].after - 1e-12 && r <= grid.watches[w].level) {
                path.passages[w] = t;
            }
        }
    };
    auto guard = [&](double t) {
        for (double v : x) {
            if (!std::isfinite(v) || std::abs(v) > grid.overflow_guard) {
                path.exploded = true;
                path.exploded_at = t;
                dead = true;
                return;
            }
        }
    };
    auto clamp = [&] {
        if (model.nonnegative && x[0] < 0.0) {
            x[0] = 0.0;
            ++path.clamp_events;
        }
    };

    auto advance = [&](double t, double h) {
        if (h <= 0.0 || frozen) return;
        x_start = x;
        double remaining = h, s = t;
        std::size_t substeps = 0;
        while (remaining > 0.0) {
            model.drift(s, x, a);
            double an = 0.0;
            for (int i = 0; i < n; ++i) {
                a[i] += offset[i];
                an += a[i] * a[i];
            }
            an = std::sqrt(an);
            double eta = remaining;
            if (an > 0.0) eta = std::min(remaining, grid.max_relative_drift * std::max(norm(x), 1.0) / an);
            if (eta >= remaining * (1.0 - 1e-12)) eta = remaining;
            for (int i = 0; i < n; ++i) x[i] += a[i] * eta;
            remaining -= eta;
            s += eta;
            if (++substeps > kMaxSubsteps || !std::isfinite(x[0])) {
                x[0] = kInf;
                return;
            }
        }
        const double sq = std::sqrt(h);
        if (m > 0) {
            model.diffusion(t, x_start, sig);
            for (int k = 0; k < m; ++k) xi[k] = sample_normal(gauss);
            for (int i = 0; i < n; ++i) {
                double acc = 0.0;
                for (int k = 0; k < m; ++k) acc += sig[i * m + k] * xi[k];
                x[i] += acc * sq;
            }
        }
        if (has_proxy) {
            for (int i = 0; i < n; ++i) x[i] += std::sqrt(plan.proxy_variance[i] * h) * sample_normal(gauss);
        }
        if (plan.mid_rate > 0.0) {
            const std::uint64_t count = sample_poisson(plan.mid_rate * h, small);
            for (std::uint64_t c = 0; c < count; ++c) {
                const Vec z = sample_mid_jump(model.kernel, grid.small_jump_epsilon, small);
                for (int i = 0; i < n; ++i) x[i] += z[i];
            }
        }
        clamp();
    };

    auto apply_jump = [&](const JumpEvent& ev, double t) {
        watch(t);  // pre-jump value
        if (frozen) return;
        if (norm(ev.size) > threshold) {
            frozen = true;
            path.truncated_at = t;
            return;
        }
        for (int i = 0; i < n; ++i) x[i] += ev.size[i];
        clamp();
        if (grid.keep_jump_log) path.jump_log.push_back({t, ev.size, ev.large});
    };

    record(0.0);
    watch(0.0);
    const std::size_t steps = grid.steps();
    std::size_t j = 0;
    double t = 0.0;
    for (std::size_t k = 0; k < steps && !dead; ++k) {
        const double t_next = grid.time_at(k + 1);
        if (grid.jump_adapted) {
            while (j < jumps.size() && jumps[j].time <= t_next && !dead) {
                advance(t, jumps[j].time - t);
                t = jumps[j].time;
                guard(t);
                if (dead) break;
                apply_jump(jumps[j], t);
                guard(t);
                if (dead) break;
                watch(t);
                if (grid.record_every == 1 && t < t_next) record(t);
                ++j;
            }
            if (dead) break;
            advance(t, t_next - t);
        } else {
            advance(t, t_next - t);
            while (j < jumps.size() && jumps[j].time <= t_next) apply_jump(jumps[j++], t_next);
        }
        t = t_next;
        guard(t);
        if (dead) break;
        watch(t);
        if ((k + 1) % static_cast<std::size_t>(grid.record_every) == 0 || k + 1 == steps) record(t);
    }
    return path;
}

InitialLaw fixed_start(Vec x0) {
    return [x0 = std::move(x0)](RandomStream&) { return x0; };
}

std::size_t PathBatch::exploded() const {
    return static_cast<std::size_t>(std::count_if(paths.begin(), paths.end(), [](const Path& p) { return p.exploded; }));
}

PathBatch simulate_batch(const ModelSpec& model, const SimulationGrid& grid, const InitialLaw& x0_law,
                         std::size_t n_paths, std::uint64_t base_seed, const TruncationPolicy& truncation,
                         unsigned workers) {
    if (n_paths < 1) throw DomainError("n_paths must be >= 1");
    grid.validate();
    PathBatch batch;
    batch.base_seed = base_seed;
    batch.grid = grid;
    batch.paths.resize(n_paths);

    auto run = [&](std::size_t i) {
        const RandomStream stream(base_seed, i);
        RandomStream init = stream.substream(Lane::initial_state);
        const Vec x0 = x0_law(init);
        batch.paths[i] = simulate_path(model, grid, x0, stream, truncation);
    };

    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n_paths)));
    if (workers == 1) {
        for (std::size_t i = 0; i < n_paths; ++i) run(i);
        return batch;
    }
    // Each path writes only its own slot, so the result does not depend on scheduling.
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n_paths && !failed; i = next++) {
                try {
                    run(i);
                } catch (...) {
                    if (!failed.exchange(true)) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
    return batch;
}

std::optional<Passage> detect_passage_time(const Path& path, double R, double after) {
    if (!(R > 0.0)) throw DomainError("passage level must be positive");
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (path.times[i] < after - 1e-12) continue;
        if (path.norm_at(i) <= R) return Passage{path.times[i], path.times[i] - after};
    }
    return std::nullopt;
}

double storage_flow(double kappa, double x, double s) {
    if (s <= 0.0) return x;
    if (x > 1.0) {
        const double to_one = kappa == 1.0 ? std::log(x) : (std::pow(x, 1.0 - kappa) - 1.0) / (1.0 - kappa);
        if (s < to_one) {
            if (kappa == 1.0) return x * std::exp(-s);
            return std::pow(std::pow(x, 1.0 - kappa) - (1.0 - kappa) * s, 1.0 / (1.0 - kappa));
        }
        s -= to_one;
        x = 1.0;
    }
    return x * std::exp(-s);
}

Path simulate_storage_exact(double kappa, double x0, double horizon, const std::vector<JumpEvent>& jumps,
                            double record_dt) {
    if (!(kappa >= -1.0)) throw DomainError("storage: kappa must be >= -1");
    if (!(x0 >= 0.0)) throw DomainError("storage: x0 must be nonnegative");
    if (!(record_dt > 0.0 && horizon >= record_dt)) throw DomainError("storage: need 0 < record_dt <= horizon");
    Path path;
    path.dimension = 1;
    const auto steps = static_cast<std::size_t>(std::ceil(horizon / record_dt - 1e-9));
    double x = x0, t = 0.0;
    path.times.push_back(0.0);
    path.states.push_back(x);
    std::size_t j = 0;
    for (std::size_t k = 1; k <= steps; ++k) {
        const double tk = std::min(static_cast<double>(k) * record_dt, horizon);
        while (j < jumps.size() && jumps[j].time <= tk) {
            x = storage_flow(kappa, x, jumps[j].time - t);
            t = jumps[j].time;
            x += jumps[j].size[0];
            path.jump_log.push_back(jumps[j]);
            if (t < tk) {
                path.times.push_back(t);
                path.states.push_back(x);
            }
            ++j;
        }
        x = storage_flow(kappa, x, tk - t);
        t = tk;
        path.times.push_back(t);
        path.states.push_back(x);
    }
    return path;
}

Path simulate_storage_exact(double kappa, double alpha, double x0, double horizon, const RandomStream& stream,
                            double record_dt) {
    RandomStream jump_stream = stream.substream(Lane::large_jumps);
    const auto kernel = JumpKernel::pareto(1, alpha, 1.0, DirectionLaw::positive);
    Path path = simulate_storage_exact(kappa, x0, horizon, sample_large_jumps(kernel, horizon, jump_stream), record_dt);
    path.stream_id = stream.stream_id();
    return path;
}

}  // namespace lyapsim
