#include <benchmark/benchmark.h>

#include <map>
#include <vector>

#include <omp.h>

#include "hetero/cdf.hpp"
#include "hetero/scm.hpp"

using namespace hetero;

namespace {

const Dataset& sample(std::size_t n) {
  static std::map<std::size_t, Dataset> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, sample_observational(find_scm("appc_main"), n, 1)).first;
  return it->second;
}

// 100 CDF evaluations at one (x, w): one local fit, then lookups.
void BM_LocalFit(benchmark::State& state) {
  const auto& data = sample(static_cast<std::size_t>(state.range(0)));
  const CdfModel model(data, KernelSpec{KernelFamily::kEpanechnikov, 0.3});
  const std::vector<double> w{0.5};
  for (auto _ : state) {
    const auto fit = model.local_fit(1.0, w);
    double s = 0.0;
    for (int k = 0; k < 100; ++k) s += fit(-1.0 + 0.02 * k);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_LocalFit)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);

// Same 100 evaluations, one dense least-squares solve each.
void BM_LocalFitReference(benchmark::State& state) {
  const auto& data = sample(static_cast<std::size_t>(state.range(0)));
  const KernelSpec kernel{KernelFamily::kEpanechnikov, 0.3};
  const std::vector<double> w{0.5};
  for (auto _ : state) {
    double s = 0.0;
    for (int k = 0; k < 100; ++k) s += reference::local_linear_cdf(data, kernel, -1.0 + 0.02 * k, 1.0, w);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_LocalFitReference)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);

void BM_OracleParallel(benchmark::State& state) {
  omp_set_num_threads(static_cast<int>(state.range(0)));
  const auto scm = find_scm("appc_main");
  const auto pair = PolicyPair::single_shift(BaseLaw::uniform(0.0, 0.1), 1.9);
  const std::vector<double> w{0.5};
  for (auto _ : state) benchmark::DoNotOptimize(oracle_cpice_parts(scm, w, pair, 1'000'000, 3));
}
BENCHMARK(BM_OracleParallel)->Arg(1)->Arg(omp_get_num_procs())->Unit(benchmark::kMillisecond);

void BM_OracleSerial(benchmark::State& state) {
  const auto scm = find_scm("appc_main");
  const auto pair = PolicyPair::single_shift(BaseLaw::uniform(0.0, 0.1), 1.9);
  const std::vector<double> w{0.5};
  for (auto _ : state) {
    benchmark::DoNotOptimize(reference::oracle_cpice_parts_serial(scm, w, pair, 1'000'000, 3));
  }
}
BENCHMARK(BM_OracleSerial)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
