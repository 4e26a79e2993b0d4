#include <benchmark/benchmark.h>

#include "visreg/conv.hpp"
#include "visreg/rng.hpp"

namespace {

visreg::Matrix2D random_image(int side, uint64_t seed) {
  visreg::Rng rng(seed);
  visreg::Matrix2D m(side, side);
  for (double& v : m.values()) v = rng.uniform(-1.0, 1.0);
  return m;
}

void BM_ConvSameHighPass(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const auto img = random_image(side, 7);
  const auto ker = visreg::laplacian3();
  for (auto _ : state) {
    benchmark::DoNotOptimize(visreg::conv_same(img, ker));
  }
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_ConvSameHighPass)->Arg(28)->Arg(64)->Arg(128)->Arg(256);

void BM_ConvSame5x5(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const auto img = random_image(side, 11);
  visreg::Rng rng(13);
  visreg::RelKernel ker(2);
  for (int di = -2; di <= 2; ++di)
    for (int dj = -2; dj <= 2; ++dj) ker.at(di, dj) = rng.uniform(-1.0, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(visreg::conv_same(img, ker));
  }
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_ConvSame5x5)->Arg(28)->Arg(64)->Arg(128);

}  // namespace
