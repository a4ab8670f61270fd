#include <benchmark/benchmark.h>

#include "ergodrift/diffusion.hpp"
#include "ergodrift/posterior.hpp"
#include "ergodrift/priors.hpp"
#include "ergodrift/simulate.hpp"
#include "ergodrift/transition.hpp"
#include "ergodrift/wavelet.hpp"

using namespace ergodrift;

namespace {

Drift bench_drift() { return drifts::tanh_with_sines(1.5, 1.0, {0.3, 0.2}, {2.0, 0.7}, {0.5, 1.0}); }

void BM_DiscretizeGenerator(benchmark::State& st) {
    SpatialGrid g(-6, 6, static_cast<int>(st.range(0)));
    auto b = bench_drift();
    for (auto _ : st) benchmark::DoNotOptimize(discretize_generator(b, g));
}
BENCHMARK(BM_DiscretizeGenerator)->Arg(401)->Arg(1001);

void BM_KernelSpectral(benchmark::State& st) {
    SpatialGrid g(-6, 6, static_cast<int>(st.range(0)));
    auto A = discretize_generator(bench_drift(), g);
    for (auto _ : st) benchmark::DoNotOptimize(transition_kernel(A, 0.5, KernelMethod::spectral));
}
BENCHMARK(BM_KernelSpectral)->Arg(201)->Arg(401)->Arg(1001)->Unit(benchmark::kMillisecond);

void BM_KernelPade(benchmark::State& st) {
    SpatialGrid g(-6, 6, static_cast<int>(st.range(0)));
    auto A = discretize_generator(bench_drift(), g);
    for (auto _ : st) benchmark::DoNotOptimize(transition_kernel(A, 0.5, KernelMethod::pade));
}
BENCHMARK(BM_KernelPade)->Arg(201)->Arg(401)->Unit(benchmark::kMillisecond);

void BM_SpectrumApply(benchmark::State& st) {
    SpatialGrid g(-12, 12, 481);
    SemigroupSpectrum S(discretize_generator(bench_drift(), g));
    auto f = sample_on(g, test_function("tanh").f);
    for (auto _ : st) benchmark::DoNotOptimize(S.apply(0.5, f));
}
BENCHMARK(BM_SpectrumApply);

void BM_LogLikelihood(benchmark::State& st) {
    SpatialGrid g(-8, 8, 641);
    auto b = bench_drift();
    auto pi = invariant_density(b, g);
    Rng rng(1);
    auto rec = discrete_observations(b, pi, 0.5, static_cast<int>(st.range(0)), 0.0025, rng);
    LikelihoodContext ctx(rec, g);
    log_likelihood(ctx, b);
    for (auto _ : st) benchmark::DoNotOptimize(log_likelihood(ctx, b));
}
BENCHMARK(BM_LogLikelihood)->Arg(1000)->Arg(5000);

void BM_EulerObservations(benchmark::State& st) {
    SpatialGrid g(-8, 8, 641);
    auto b = bench_drift();
    auto pi = invariant_density(b, g);
    Rng rng(2);
    for (auto _ : st) benchmark::DoNotOptimize(discrete_observations(b, pi, 0.5, 1000, 0.0025, rng));
}
BENCHMARK(BM_EulerObservations)->Unit(benchmark::kMillisecond);

void BM_WaveletPriorDraw(benchmark::State& st) {
    auto spec = WaveletPriorSpec::defaults();
    Rng rng(3);
    for (auto _ : st) benchmark::DoNotOptimize(draw_wavelet_prior(spec, rng));
}
BENCHMARK(BM_WaveletPriorDraw);

void BM_WaveletEvaluate(benchmark::State& st) {
    auto spec = WaveletPriorSpec::defaults();
    Rng rng(4);
    auto b = draw_wavelet_prior(spec, rng);
    double x = -3.0;
    for (auto _ : st) {
        benchmark::DoNotOptimize(b(x));
        x = x > 3.0 ? -3.0 : x + 0.001;
    }
}
BENCHMARK(BM_WaveletEvaluate);

void BM_CheckErgodicity(benchmark::State& st) {
    auto spec = WaveletPriorSpec::defaults();
    Rng rng(5);
    auto b = draw_wavelet_prior(spec, rng);
    for (auto _ : st) benchmark::DoNotOptimize(check_ergodicity(b, {16, 32, 64}));
}
BENCHMARK(BM_CheckErgodicity)->Unit(benchmark::kMillisecond);

void BM_KlDivergence(benchmark::State& st) {
    SpatialGrid g(-8, 8, 321);
    auto b0 = tail_extend(drifts::ornstein_uhlenbeck(), 2.0);
    auto b = tail_extend(drifts::ornstein_uhlenbeck(1.0, 0.3), 2.0);
    for (auto _ : st) benchmark::DoNotOptimize(kl_divergence(b0, b, 0.5, g));
}
BENCHMARK(BM_KlDivergence)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
