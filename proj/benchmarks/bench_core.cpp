#include <benchmark/benchmark.h>

#include "easde/baselines.hpp"
#include "easde/eas.hpp"
#include "easde/modes.hpp"
#include "easde/sphere.hpp"
#include "easde/vmf.hpp"

#include <cstddef>

namespace {

using namespace easde;

void bm_encode(benchmark::State& state)
{
    const std::size_t d = 3;
    const std::size_t m = static_cast<std::size_t>(state.range(0));
    const std::size_t k = 3 * 8; // ~ d log m for the sizes below
    ProjectionBank bank = make_bank(d, m, 11);
    PointList xs = sample_uniform(d, 256, 12);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(encode(bank, k, xs[i]));
        i = (i + 1) & 255;
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}
BENCHMARK(bm_encode)->Arg(1000)->Arg(10000);

void bm_fit(benchmark::State& state)
{
    const std::size_t d = 3;
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    ProjectionBank bank = make_bank(d, n, 21);
    PointList data = sample_uniform(d, n, 22);
    const std::size_t k = 24;
    for (auto _ : state)
        benchmark::DoNotOptimize(fit(bank, k, data));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * n);
}
BENCHMARK(bm_fit)->Arg(1000)->Arg(4000);

void bm_evaluate_batch(benchmark::State& state)
{
    const std::size_t d = 3;
    const std::size_t n = 4000;
    ProjectionBank bank = make_bank(d, n, 31);
    PointList data = sample_uniform(d, n, 32);
    EasModel model = fit(bank, 24, data);
    PointList probes = sample_uniform(d, static_cast<std::size_t>(state.range(0)), 33);
    for (auto _ : state)
        benchmark::DoNotOptimize(evaluate_batch(model, probes));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations())
                            * state.range(0));
}
BENCHMARK(bm_evaluate_batch)->Arg(256)->Arg(2048);

void bm_cap_mass(benchmark::State& state)
{
    const std::size_t d = static_cast<std::size_t>(state.range(0));
    double r = 0.1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(cap_mass(d, r));
        r += 1e-4;
        if (r > 1.9)
            r = 0.1;
    }
}
BENCHMARK(bm_cap_mass)->Arg(3)->Arg(8);

void bm_vmf_sample(benchmark::State& state)
{
    UnitVector mu = sample_uniform(3, 1, 41)[0];
    std::uint64_t seed = 0;
    for (auto _ : state)
        benchmark::DoNotOptimize(
            vmf_sample({mu, 50.0}, static_cast<std::size_t>(state.range(0)), ++seed));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations())
                            * state.range(0));
}
BENCHMARK(bm_vmf_sample)->Arg(1000);

void bm_knn_radii(benchmark::State& state)
{
    PointList data =
        sample_uniform(3, static_cast<std::size_t>(state.range(0)), 51);
    for (auto _ : state)
        benchmark::DoNotOptimize(knn_radii(data, 20));
}
BENCHMARK(bm_knn_radii)->Arg(1000)->Arg(4000);

} // namespace

BENCHMARK_MAIN();
