#include <benchmark/benchmark.h>

#include "visreg/rng.hpp"
#include "visreg/visloss.hpp"

namespace {

visreg::VRWeights random_slabs(int count, int side, uint64_t seed) {
  visreg::Rng rng(seed);
  visreg::VRWeights w;
  for (int s = 0; s < count; ++s) {
    visreg::Matrix2D m(side, side);
    for (double& v : m.values()) v = rng.uniform(-0.1, 0.1);
    w.slabs.push_back({s, 0, std::move(m)});
  }
  return w;
}

void BM_Vl2Model(benchmark::State& state) {
  const auto w = random_slabs(static_cast<int>(state.range(0)), 28, 3);
  const auto ker = visreg::laplacian3();
  for (auto _ : state) {
    benchmark::DoNotOptimize(visreg::vl_model(w, ker, visreg::VLNorm::l2));
  }
}
BENCHMARK(BM_Vl2Model)->Arg(64)->Arg(256)->Arg(1024);

void BM_GradVl2Model(benchmark::State& state) {
  const auto w = random_slabs(static_cast<int>(state.range(0)), 28, 5);
  const auto ker = visreg::laplacian3();
  for (auto _ : state) {
    benchmark::DoNotOptimize(visreg::grad_vl_model(w, ker, visreg::VLNorm::l2));
  }
}
BENCHMARK(BM_GradVl2Model)->Arg(64)->Arg(256)->Arg(1024);

}  // namespace
