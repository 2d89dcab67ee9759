#include <benchmark/benchmark.h>

#include "ggmac/channel.hpp"
#include "ggmac/estimators.hpp"
#include "ggmac/model.hpp"
#include "ggmac/solver.hpp"

namespace {

using namespace ggmac;

GgmModel star(int d) { return generate_star_model(d, 0.25); }

void BM_sample(benchmark::State& state) {
  GgmModel m = star(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample(m, 10000, 42));
  }
  state.SetItemsProcessed(state.iterations() * 10000 * state.range(0));
}
BENCHMARK(BM_sample)->Arg(10)->Arg(50);

void BM_signs_covariance(benchmark::State& state) {
  GgmModel m = star(50);
  SignMatrix bits = sign_quantize(sample(m, state.range(0), 7));
  for (auto _ : state) {
    benchmark::DoNotOptimize(signs_covariance(bits));
  }
}
BENCHMARK(BM_signs_covariance)->Arg(10000)->Arg(100000);

void BM_uncoded_pipeline(benchmark::State& state) {
  GgmModel m = star(50);
  ChannelSpec chan = identity_channel(50, 3.0, 1.0);
  RealBlockChannel rb = build_real_block(chan);
  SampleMatrix x = sample(m, state.range(0), 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(uncoded_covariance(transmit_uncoded(x, rb, 9), rb));
  }
}
BENCHMARK(BM_uncoded_pipeline)->Arg(10000)->Arg(100000);

void BM_glasso(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  GgmModel m = star(d);
  CovarianceEstimate est = sample_covariance(sample(m, 4000, 11));
  SolverConfig cfg;
  cfg.lambda = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(glasso_solve(est, cfg));
  }
}
BENCHMARK(BM_glasso)->Arg(10)->Arg(25)->Arg(50);

void BM_model_generation(benchmark::State& state) {
  std::uint64_t seed = 0;
  RandomModelOptions opts;
  opts.require_incoherence = false;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        generate_random_model(static_cast<int>(state.range(0)), 0.1, 5, -1.0,
                              1.0, ++seed, opts));
  }
}
BENCHMARK(BM_model_generation)->Arg(20)->Arg(50);

}  // namespace

BENCHMARK_MAIN();
