#include <cmath>
#include <vector>

#include <benchmark/benchmark.h>

#include "lyapsim/integrator.hpp"
#include "lyapsim/lyapunov.hpp"
#include "lyapsim/oracles.hpp"
#include "lyapsim/quadrature.hpp"
#include "lyapsim/sampling.hpp"

using namespace lyapsim;

static void BM_Normal(benchmark::State& state) {
    RandomStream s(1, 0);
    for (auto _ : state) benchmark::DoNotOptimize(sample_normal(s));
}
BENCHMARK(BM_Normal);

static void BM_ParetoMagnitude(benchmark::State& state) {
    RandomStream s(1, 0);
    for (auto _ : state) benchmark::DoNotOptimize(sample_pareto_magnitude(2.5, s));
}
BENCHMARK(BM_ParetoMagnitude);

static void BM_SymmetricStable(benchmark::State& state) {
    RandomStream s(1, 0);
    for (auto _ : state) benchmark::DoNotOptimize(sample_symmetric_stable(1.5, 1.0, s));
}
BENCHMARK(BM_SymmetricStable);

static void BM_Poisson(benchmark::State& state) {
    RandomStream s(1, 0);
    const double mean = static_cast<double>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(sample_poisson(mean, s));
}
BENCHMARK(BM_Poisson)->Arg(1)->Arg(100)->Arg(10000);

// One storage path over [0, 10]; items are Euler steps.
static void BM_StoragePath(benchmark::State& state) {
    const auto model = make_storage(0.0, 2.5);
    SimulationGrid g;
    g.horizon = 10.0;
    g.dt = 1e-3;
    std::uint64_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(simulate_path(model, g, std::vector{0.0}, RandomStream(3, i++)));
    state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_StoragePath)->Unit(benchmark::kMillisecond);

static void BM_StorageExact(benchmark::State& state) {
    std::uint64_t i = 0;
    for (auto _ : state)
        benchmark::DoNotOptimize(simulate_storage_exact(0.0, 2.5, 0.0, 10.0, RandomStream(3, i++), 1e-3));
}
BENCHMARK(BM_StorageExact)->Unit(benchmark::kMillisecond);

static void BM_Lorenz84Path(benchmark::State& state) {
    const auto model = make_lorenz84(0.25, 4.0, 1.0, 0.0, 1.5);
    SimulationGrid g;
    g.horizon = 1.0;
    g.dt = 1e-3;
    std::uint64_t i = 0;
    for (auto _ : state)
        benchmark::DoNotOptimize(simulate_path(model, g, std::vector{1.0, 1.0, 1.0}, RandomStream(5, i++)));
}
BENCHMARK(BM_Lorenz84Path)->Unit(benchmark::kMillisecond);

static void BM_EndpointSingular(benchmark::State& state) {
    for (auto _ : state)
        benchmark::DoNotOptimize(integrate_endpoint_singular([](double x) { return std::pow(x, -0.5); }, 0.0, 1.0));
}
BENCHMARK(BM_EndpointSingular);

static void BM_MomentLowerBound(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(storage_moment_lower_bound(2.5, 0.0, 50.0, 1.6));
}
BENCHMARK(BM_MomentLowerBound);

static void BM_CertifyOu(benchmark::State& state) {
    const auto model = make_linear_ou(1.0, 0.5, 2.5);
    const auto d = preset_params(model, 2.4);
    const auto grid = CertificationGrid::standard(d.r0, model.dimension);
    for (auto _ : state) benchmark::DoNotOptimize(certify_L_condition(model, d, grid));
}
BENCHMARK(BM_CertifyOu)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
