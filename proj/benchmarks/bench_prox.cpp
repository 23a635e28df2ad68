#include <vector>

#include <benchmark/benchmark.h>

#include "granular/joint_potential.hpp"
#include "granular/potentials.hpp"
#include "granular/proximal.hpp"
#include "granular/rng.hpp"

namespace {

void BM_ProxV2(benchmark::State& state) {
  const auto v = granular::make_builtin("V2", 1);
  const auto cfg = granular::ProxConfig::defaults(0.01, 0.0);
  const std::vector<double> x{2.5};
  for (auto _ : state) benchmark::DoNotOptimize(granular::prox(v, x, 0.01, cfg));
}
BENCHMARK(BM_ProxV2);

void BM_JointGradient(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto psi = granular::lift_psi(granular::make_builtin("V3", 2),
                                      granular::make_builtin("W5", 2), n);
  std::vector<double> x(2 * n), g(2 * n);
  granular::rng::standard_normals({3, granular::rng::Purpose::initial, 0}, 0, 0, x);
  for (auto _ : state) {
    psi.gradient(x, g);
    benchmark::DoNotOptimize(g.data());
  }
}
BENCHMARK(BM_JointGradient)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace
