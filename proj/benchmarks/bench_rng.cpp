#include <vector>

#include <benchmark/benchmark.h>

#include "granular/rng.hpp"

namespace {

void BM_Philox(benchmark::State& state) {
  std::uint32_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(granular::rng::philox4x32({i++, 1, 2, 3}, {7, 11}));
  }
}
BENCHMARK(BM_Philox);

void BM_StandardNormals(benchmark::State& state) {
  std::vector<double> out(static_cast<std::size_t>(state.range(0)));
  std::uint32_t step = 0;
  for (auto _ : state) {
    granular::rng::standard_normals({42, granular::rng::Purpose::noise, 0}, step++, 0, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_StandardNormals)->Arg(2)->Arg(1024);

}  // namespace

BENCHMARK_MAIN();
