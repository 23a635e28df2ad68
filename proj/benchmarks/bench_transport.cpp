#include <vector>

#include <benchmark/benchmark.h>

#include "granular/rng.hpp"
#include "granular/transport.hpp"

namespace {

std::vector<double> normals(std::size_t n, std::uint32_t tag) {
  std::vector<double> out(n);
  granular::rng::standard_normals({1, granular::rng::Purpose::initial, tag}, 0, 0, out);
  return out;
}

void BM_Sorted1d(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = normals(n, 1), b = normals(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(granular::w2_sorted_1d(a, b));
}
BENCHMARK(BM_Sorted1d)->Arg(1 << 10)->Arg(1 << 16);

void BM_Quantile1d(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = normals(n, 1), b = normals(4 * n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(granular::w2_quantile_1d(a, b));
}
BENCHMARK(BM_Quantile1d)->Arg(1 << 10)->Arg(1 << 14);

void BM_Assignment2d(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = normals(2 * n, 1), b = normals(2 * n, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(granular::w2_assignment({a, 2}, {b, 2}));
  }
}
BENCHMARK(BM_Assignment2d)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace
