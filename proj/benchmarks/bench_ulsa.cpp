#include <benchmark/benchmark.h>

#include "ulsa/agent.hpp"
#include "ulsa/learned_denoiser.hpp"
#include "ulsa/random.hpp"

using namespace ulsa;

namespace {

const Shape kStack{3, 32, 32};

const GaussianDenoiser& gaussian() {
  static const GaussianDenoiser d(GaussianPrior::squared_exponential(Tensor(kStack, 0.0), SeKernel{}));
  return d;
}

const LearnedDenoiser& learned() {
  static const LearnedDenoiser d = [] {
    Rng rng(1, Stream::test);
    return LearnedDenoiser::initialized(kStack, 16, 32, Tensor(kStack, 0.0), rng);
  }();
  return d;
}

void BM_EntropyMap(benchmark::State& state) {
  Rng rng(2, Stream::test);
  const Tensor beliefs = rng.normal_tensor({static_cast<std::size_t>(state.range(0)), 32, 32});
  for (auto _ : state) benchmark::DoNotOptimize(entropy_map(beliefs, 0.04));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_EntropyMap)->RangeMultiplier(2)->Range(2, 32)->Complexity(benchmark::oNSquared);

void BM_GaussianDenoise(benchmark::State& state) {
  const auto s = make_cosine_schedule(500);
  Rng rng(3, Stream::test);
  const Tensor x = rng.normal_tensor(kStack);
  for (auto _ : state) benchmark::DoNotOptimize(gaussian().predict_noise(x, 250, s));
}
BENCHMARK(BM_GaussianDenoise);

void BM_GaussianVjp(benchmark::State& state) {
  const auto s = make_cosine_schedule(500);
  Rng rng(4, Stream::test);
  const Tensor v = rng.normal_tensor(kStack);
  for (auto _ : state) benchmark::DoNotOptimize(gaussian().tweedie_vjp(v, 250, s));
}
BENCHMARK(BM_GaussianVjp);

void BM_LearnedDenoise(benchmark::State& state) {
  const auto s = make_cosine_schedule(500);
  Rng rng(5, Stream::test);
  const Tensor x = rng.normal_tensor(kStack);
  for (auto _ : state) benchmark::DoNotOptimize(learned().predict_noise(x, 250, s));
}
BENCHMARK(BM_LearnedDenoise);

void BM_KGreedy(benchmark::State& state) {
  Rng rng(6, Stream::test);
  std::vector<double> h(static_cast<std::size_t>(state.range(0)));
  for (double& v : h) v = rng.uniform();
  const auto k = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(k_greedy_select(h, k, 4.0));
}
BENCHMARK(BM_KGreedy)->Args({32, 4})->Args({128, 16})->Args({512, 64});

void BM_DpsStep(benchmark::State& state) {
  const auto s = make_cosine_schedule(500);
  const auto n = static_cast<std::size_t>(state.range(0));
  const ParticleStack init = noise_particles(kStack, n, 7, 1);
  Tensor m(kStack, 0.0);
  for (std::size_t i = 0; i < m.size(); i += 8) m[i] = 1.0;
  const Mask a(m);
  const Tensor y(kStack, 0.0);
  const GuidanceConfig g;
  for (auto _ : state) benchmark::DoNotOptimize(dps_sample(gaussian(), s, y, a, init, 450, 1, g));
}
BENCHMARK(BM_DpsStep)->Arg(1)->Arg(4)->Arg(8)->UseRealTime();

void BM_Phantom(benchmark::State& state) {
  PhantomParams p;
  p.frames = 16;
  for (auto _ : state) benchmark::DoNotOptimize(generate_phantom(p));
}
BENCHMARK(BM_Phantom);

}  // namespace

BENCHMARK_MAIN();
