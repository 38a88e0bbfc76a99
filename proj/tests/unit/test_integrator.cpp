#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "lyapsim/errors.hpp"
#include "lyapsim/integrator.hpp"

using namespace lyapsim;

namespace {

SimulationGrid grid(double horizon, double dt) {
    SimulationGrid g;
    g.horizon = horizon;
    g.dt = dt;
    return g;
}

double last(const Path& p) { return p.states.back(); }

// 1-d model dx = c dt with no noise.
ModelSpec constant_drift(double c, bool nonnegative) {
    ModelSpec m;
    m.name = "constant";
    m.dimension = 1;
    m.drift = [c](double, std::span<const double>, std::span<double> out) { out[0] = c; };
    m.kernel = JumpKernel::none(1);
    m.nonnegative = nonnegative;
    return m;
}

ModelSpec expanding_drift() {
    ModelSpec m = constant_drift(0.0, false);
    m.drift = [](double, std::span<const double> x, std::span<double> out) { out[0] = x[0]; };
    return m;
}

}  // namespace

TEST(Euler, ZeroNoiseOuMatchesExponential) {
    const auto m = make_linear_ou(1.0, 0.0, 0.0);
    const Path p = simulate_path(m, grid(1.0, 1e-3), std::vector{1.0}, RandomStream(1, 0));
    EXPECT_NEAR(last(p), std::exp(-1.0), 1e-3);
    EXPECT_NEAR(last(p), std::pow(1.0 - 1e-3, 1000), 1e-12);
}

TEST(Euler, WeakErrorHalvesWithStep) {
    const auto m = make_linear_ou(1.0, 0.0, 0.0);
    const double e1 = std::abs(last(simulate_path(m, grid(1.0, 2e-3), std::vector{1.0}, RandomStream(1, 0))) -
                               std::exp(-1.0));
    const double e2 = std::abs(last(simulate_path(m, grid(1.0, 1e-3), std::vector{1.0}, RandomStream(1, 0))) -
                               std::exp(-1.0));
    EXPECT_NEAR(e1 / e2, 2.0, 0.05);
}

TEST(Euler, SuperlinearDriftComesDownFromInfinity) {
    // x' = -x^3 from 1e6: x(t) = (x0^-2 + 2t)^{-1/2}, about 1 at t = 1/2.
    const auto m = make_power_drift(1.0, 3.0, 0.0);
    const Path p = simulate_path(m, grid(0.5, 1e-3), std::vector{1e6}, RandomStream(1, 0));
    EXPECT_FALSE(p.exploded);
    const double exact = 1.0 / std::sqrt(1e-12 + 1.0);
    EXPECT_NEAR(last(p), exact, 0.01 * exact);
}

TEST(Euler, OuMeanWithinStandardErrors) {
    const auto m = make_linear_ou(1.0, 0.5, 0.0);
    const auto batch = simulate_batch(m, grid(1.0, 1e-3), fixed_start({2.0}), 2000, 7);
    double s = 0.0, s2 = 0.0;
    for (const auto& p : batch.paths) {
        s += last(p);
        s2 += last(p) * last(p);
    }
    const double n = 2000.0, mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
    EXPECT_NEAR(mean, 2.0 * std::exp(-1.0), 4.0 * se);
    // Var X_1 = sigma^2 (1 - e^{-2}) / 2.
    EXPECT_NEAR(s2 / n - mean * mean, 0.25 * (1.0 - std::exp(-2.0)) / 2.0, 0.01);
}

TEST(Euler, ForcedJumpMatchesExactStorage) {
    const auto m = make_storage(0.0, 2.5);
    const std::vector<JumpEvent> jumps{{1.0, {3.0}, true}};
    auto g = grid(3.0, 1e-3);
    g.scripted_jumps = jumps;
    const Path euler = simulate_path(m, g, std::vector{5.0}, RandomStream(1, 0));
    const Path exact = simulate_storage_exact(0.0, 5.0, 3.0, jumps, 1e-3);
    EXPECT_NEAR(last(exact), 5.0, 1e-12);
    EXPECT_NEAR(last(euler), last(exact), 1e-6);
    ASSERT_EQ(euler.jump_log.size(), 1u);
    EXPECT_EQ(euler.jump_log[0].time, 1.0);
}

TEST(Euler, SharesJumpsWithExactStorage) {
    for (double kappa : {0.0, 1.0, 2.0}) {
        const auto m = make_storage(kappa, 1.5);
        for (std::uint64_t id = 0; id < 5; ++id) {
            const RandomStream s(11, id);
            const Path euler = simulate_path(m, grid(5.0, 1e-3), std::vector{2.0}, s);
            const Path exact = simulate_storage_exact(kappa, 1.5, 2.0, 5.0, s, 1e-3);
            ASSERT_EQ(euler.jump_log.size(), exact.jump_log.size());
            for (std::size_t j = 0; j < exact.jump_log.size(); ++j)
                EXPECT_EQ(euler.jump_log[j].size, exact.jump_log[j].size);
            EXPECT_NEAR(last(euler), last(exact), 0.01 * std::max(1.0, last(exact))) << kappa << " " << id;
        }
    }
}

TEST(Batch, SinglePathEqualsDirectSimulation) {
    const auto m = make_storage(0.5, 1.5);
    const auto g = grid(2.0, 1e-2);
    const auto batch = simulate_batch(m, g, fixed_start({1.0}), 1, 42);
    const Path direct = simulate_path(m, g, std::vector{1.0}, RandomStream(42, 0));
    EXPECT_EQ(batch.paths[0].times, direct.times);
    EXPECT_EQ(batch.paths[0].states, direct.states);
}

TEST(Batch, IndependentOfWorkerCount) {
    const auto m = make_linear_ou(1.0, 1.0, 1.5);
    const auto g = grid(2.0, 1e-2);
    const auto one = simulate_batch(m, g, fixed_start({0.0}), 9, 3, {}, 1);
    const auto three = simulate_batch(m, g, fixed_start({0.0}), 9, 3, {}, 3);
    for (std::size_t i = 0; i < 9; ++i) {
        EXPECT_EQ(one.paths[i].stream_id, i);
        EXPECT_EQ(one.paths[i].states, three.paths[i].states);
    }
}

TEST(Batch, RejectsEmpty) {
    EXPECT_THROW(simulate_batch(make_linear_ou(1, 0, 0), grid(1, 0.1), fixed_start({0.0}), 0, 1), DomainError);
}

TEST(Passage, StartingInsideIsImmediate) {
    auto g = grid(1.0, 1e-2);
    g.watches = {{1.0, 0.0}};
    const Path p = simulate_path(make_linear_ou(1.0, 0.0, 0.0), g, std::vector{0.5}, RandomStream(1, 0));
    ASSERT_TRUE(p.passages[0]);
    EXPECT_EQ(*p.passages[0], 0.0);
    const auto d = detect_passage_time(p, 1.0);
    ASSERT_TRUE(d);
    EXPECT_EQ(d->tau, 0.0);
}

TEST(Passage, SuperlinearReachesLevelInClosedFormTime) {
    // t_R = (R^-2 - x0^-2) / 2 for x' = -x^3.
    auto g = grid(0.05, 1e-4);
    g.watches = {{10.0, 0.0}};
    const Path p = simulate_path(make_power_drift(1.0, 3.0, 0.0), g, std::vector{1e6}, RandomStream(1, 0));
    ASSERT_TRUE(p.passages[0]);
    EXPECT_NEAR(*p.passages[0], 0.005, 2e-4);
    const auto d = detect_passage_time(p, 10.0);
    ASSERT_TRUE(d);
    EXPECT_NEAR(d->tau, *p.passages[0], 1e-12);
}

TEST(Passage, OutwardPathNeverEnters) {
    auto g = grid(2.0, 1e-2);
    g.watches = {{1.0, 0.0}};
    const Path p = simulate_path(expanding_drift(), g, std::vector{2.0}, RandomStream(1, 0));
    EXPECT_FALSE(p.passages[0]);
    EXPECT_FALSE(detect_passage_time(p, 1.0));
}

TEST(Passage, RespectsStartOffset) {
    auto g = grid(1.0, 1e-2);
    g.watches = {{1.0, 0.5}};
    const Path p = simulate_path(make_linear_ou(1.0, 0.0, 0.0), g, std::vector{0.5}, RandomStream(1, 0));
    ASSERT_TRUE(p.passages[0]);
    EXPECT_NEAR(*p.passages[0], 0.5, 1e-9);
    const auto d = detect_passage_time(p, 1.0, 0.5);
    ASSERT_TRUE(d);
    EXPECT_NEAR(d->delta, 0.0, 1e-9);
}

TEST(StorageExact, FlowClosedForms) {
    EXPECT_NEAR(storage_flow(0.0, 5.0, 3.0), 2.0, 1e-14);
    EXPECT_NEAR(storage_flow(2.0, 10.0, 0.4), 2.0, 1e-12);
    EXPECT_NEAR(storage_flow(1.0, std::exp(2.0), 1.0), std::exp(1.0), 1e-12);
    // Below 1 the rate is linear.
    EXPECT_NEAR(storage_flow(0.0, 0.5, 1.0), 0.5 * std::exp(-1.0), 1e-15);
    EXPECT_NEAR(storage_flow(0.0, 2.0, 2.0), std::exp(-1.0), 1e-15);
}

TEST(StorageExact, FlowIsASemigroup) {
    for (double kappa : {-0.5, 0.0, 0.5, 1.0, 3.0})
        for (double x : {0.3, 1.0, 4.0, 100.0})
            for (double s : {0.01, 0.3, 2.0}) {
                const double once = storage_flow(kappa, x, 2.0 * s);
                const double twice = storage_flow(kappa, storage_flow(kappa, x, s), s);
                EXPECT_NEAR(once, twice, 1e-10 * std::max(1.0, once)) << kappa << " " << x << " " << s;
            }
}

TEST(StorageExact, JumpUpdate) {
    const std::vector<JumpEvent> jumps{{1.0, {2.5}, true}, {2.0, {4.0}, true}};
    const Path p = simulate_storage_exact(0.0, 5.0, 3.0, jumps, 0.5);
    // 5 -> 4 at t=1, +2.5 = 6.5, -> 5.5 at t=2, +4 = 9.5, -> 8.5.
    EXPECT_NEAR(last(p), 8.5, 1e-12);
    const auto i = p.index_of(1.5, 1e-9);
    ASSERT_TRUE(i);
    EXPECT_NEAR(p.state(*i)[0], 6.0, 1e-12);
    EXPECT_THROW(simulate_storage_exact(0.0, -1.0, 3.0, jumps, 0.5), DomainError);
}

TEST(Truncation, ThresholdRespected) {
    const auto m = make_storage(0.0, 1.0);
    TruncationPolicy t;
    t.R = 100.0;
    t.epsilon = 0.5;
    t.active = true;
    EXPECT_NEAR(t.threshold(), 10.0, 1e-12);
    int truncated = 0;
    for (std::uint64_t id = 0; id < 40; ++id) {
        const Path p = simulate_path(m, grid(20.0, 1e-2), std::vector{1.0}, RandomStream(5, id), t);
        for (const auto& j : p.jump_log) EXPECT_LE(j.size[0], 10.0);
        if (!p.truncated_at) continue;
        ++truncated;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (p.times[i] > *p.truncated_at) {
                EXPECT_EQ(p.state(i)[0], p.states.back());
            }
        }
    }
    // P(some jump > 10 in [0,20]) = 1 - e^{-2}.
    EXPECT_GT(truncated, 20);
}

TEST(Truncation, ValidatesPolicy) {
    TruncationPolicy t;
    t.R = 1.0;
    t.active = true;
    EXPECT_THROW(t.validate(), DomainError);
    t.R = 100.0;
    t.epsilon = 1.0;
    EXPECT_THROW(t.validate(), DomainError);
}

TEST(Euler, NonnegativeStateIsClamped) {
    const Path p = simulate_path(constant_drift(-1.0, true), grid(2.0, 0.3), std::vector{0.5}, RandomStream(1, 0));
    EXPECT_GT(p.clamp_events, 0u);
    for (double v : p.states) EXPECT_GE(v, 0.0);
    EXPECT_EQ(last(p), 0.0);
}

TEST(Euler, RetainedTimesIncreaseAndContainJumps) {
    const auto m = make_linear_ou(1.0, 1.0, 1.2, 3.0);
    for (std::uint64_t id = 0; id < 10; ++id) {
        const Path p = simulate_path(m, grid(5.0, 1e-2), std::vector{0.0}, RandomStream(2, id));
        EXPECT_EQ(p.times.front(), 0.0);
        EXPECT_NEAR(p.times.back(), 5.0, 1e-12);
        for (std::size_t i = 1; i < p.size(); ++i) EXPECT_LT(p.times[i - 1], p.times[i]);
        for (const auto& j : p.jump_log) EXPECT_TRUE(p.index_of(j.time, 1e-12)) << j.time;
    }
}

TEST(Euler, RecordEveryThinsTheGrid) {
    auto g = grid(1.0, 1e-2);
    g.record_every = 10;
    const Path p = simulate_path(make_linear_ou(1.0, 0.0, 0.0), g, std::vector{1.0}, RandomStream(1, 0));
    ASSERT_EQ(p.size(), 11u);
    EXPECT_NEAR(p.times[3], 0.3, 1e-12);
}

TEST(Euler, OverflowMarksExplosion) {
    ModelSpec m = constant_drift(0.0, false);
    m.drift = [](double, std::span<const double> x, std::span<double> out) { out[0] = x[0] * x[0]; };
    auto g = grid(2.0, 1e-3);
    g.overflow_guard = 1e12;
    const Path p = simulate_path(m, g, std::vector{1.0}, RandomStream(1, 0));
    EXPECT_TRUE(p.exploded);
    ASSERT_TRUE(p.exploded_at);
    EXPECT_NEAR(*p.exploded_at, 1.0, 0.05);
}

TEST(Euler, RejectsBadInput) {
    const auto m = make_linear_ou(1.0, 0.0, 0.0);
    EXPECT_THROW(simulate_path(m, grid(1.0, 0.1), std::vector{1.0, 2.0}, RandomStream(1, 0)), DomainError);
    EXPECT_THROW(simulate_path(m, grid(1.0, 0.1), std::vector{std::nan("")}, RandomStream(1, 0)), DomainError);
    auto g = grid(1.0, 0.1);
    g.record_every = 0;
    EXPECT_THROW(simulate_path(m, g, std::vector{1.0}, RandomStream(1, 0)), DomainError);
}
