#include <benchmark/benchmark.h>

#include "visreg/rng.hpp"
#include "visreg/tikhonov.hpp"

namespace {

void BM_BuildGamma(benchmark::State& state) {
  const visreg::SlabGeometry geom{28, 28, static_cast<int>(state.range(0))};
  const auto ker = visreg::laplacian3();
  for (auto _ : state) {
    benchmark::DoNotOptimize(visreg::build_gamma(geom, ker));
  }
}
BENCHMARK(BM_BuildGamma)->Arg(16)->Arg(64)->Arg(256);

void BM_GammaQuadratic(benchmark::State& state) {
  const visreg::SlabGeometry geom{28, 28, static_cast<int>(state.range(0))};
  const auto gamma = visreg::build_gamma(geom, visreg::laplacian3());
  visreg::Rng rng(17);
  std::vector<double> w(static_cast<size_t>(geom.rows) * geom.cols * geom.count);
  for (double& v : w) v = rng.uniform(-0.1, 0.1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(visreg::gamma_quadratic(gamma, w));
  }
  state.SetItemsProcessed(state.iterations() * gamma.nnz());
}
BENCHMARK(BM_GammaQuadratic)->Arg(16)->Arg(64)->Arg(256);

}  // namespace
