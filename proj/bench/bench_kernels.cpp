#include <benchmark/benchmark.h>

#include <thread>

#include "unicorn/verify.hpp"

using namespace unicorn;

namespace {

std::size_t threads() { return std::max<std::size_t>(1, std::thread::hardware_concurrency()); }

void BM_UnicornRank(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  GaussianEnvConfig env{0.2, n, 1, 1};
  const Session s = gen_gaussian_session(env, 0);
  const auto alloc = TreatmentAllocation::hashed(RampFractions::two_arm(0.5), 2);
  Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(unicorn_rank(s, alloc, DesignConfig{0.5}, rng));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_UnicornRank)->Arg(10)->Arg(100)->Arg(1000);

void BM_BoundMoments(benchmark::State& state) {
  const Session s = bound_check_session(21, SessionKind::ReverseRanked, 0);
  const bool parallel = state.range(0) != 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(parallel ? bound_moments(s, 0.3, 20000, 5, TiePolicy::Random, {threads()})
                                      : bound_moments_serial(s, 0.3, 20000, 5, TiePolicy::Random));
  }
}
BENCHMARK(BM_BoundMoments)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_BruteForce(benchmark::State& state) {
  const std::vector<std::size_t> sizes{3, 4, 5, 6, 7};
  const bool parallel = state.range(0) != 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(parallel ? brute_force_optimality(sizes, 2000, 7, {threads()})
                                      : brute_force_optimality_serial(sizes, 2000, 7));
  }
}
BENCHMARK(BM_BruteForce)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_AlphaSweep(benchmark::State& state) {
  AlphaSweepConfig cfg;
  cfg.env.sessions = 1000;
  cfg.rhos = {0.2};
  cfg.alphas = {0.0, 1.0};
  const bool parallel = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(parallel ? alpha_sweep(cfg, {threads()}) : alpha_sweep_serial(cfg));
}
BENCHMARK(BM_AlphaSweep)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_ComparisonReplications(benchmark::State& state) {
  ComparisonConfig cfg;
  cfg.env.sessions = 200;
  cfg.replications = 4;
  const bool parallel = state.range(0) != 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(parallel ? run_comparison(cfg, {threads()}) : run_comparison_serial(cfg));
  }
}
BENCHMARK(BM_ComparisonReplications)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
