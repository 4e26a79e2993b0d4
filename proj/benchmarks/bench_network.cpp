#include <benchmark/benchmark.h>

#include "visreg/network.hpp"
#include "visreg/rng.hpp"

namespace {

using namespace visreg;

Batch random_batch(int n, int input_count, int classes, uint64_t seed) {
  Rng rng(seed);
  Batch b;
  for (int s = 0; s < n; ++s) {
    std::vector<double> x(input_count);
    for (double& v : x) v = rng.uniform(0.0, 1.0);
    b.inputs.push_back(std::move(x));
    b.labels.push_back(rng.uniform_int(classes));
  }
  return b;
}

NetworkModel fc_model(int width) {
  return NetworkModel(Shape3{28, 28, 1},
                      {LayerSpec::dense(width), LayerSpec::dense(width),
                       LayerSpec::softmax_output(10)},
                      42);
}

void BM_ForwardDense(benchmark::State& state) {
  const auto model = fc_model(static_cast<int>(state.range(0)));
  const auto batch = random_batch(100, 784, 10, 23);
  for (auto _ : state) {
    benchmark::DoNotOptimize(predict(model, batch));
  }
}
BENCHMARK(BM_ForwardDense)->Arg(100)->Arg(200)->Arg(400);

void BM_BackwardDense(benchmark::State& state) {
  const auto model = fc_model(static_cast<int>(state.range(0)));
  const auto batch = random_batch(100, 784, 10, 29);
  const auto ker = laplacian3();
  Rng rng(31);
  const ForwardCache fc = forward(model, batch, RunMode::train, &rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(backward(model, batch, fc, ker, 0.0, 0.01, 0.01));
  }
}
BENCHMARK(BM_BackwardDense)->Arg(100)->Arg(200)->Arg(400);

}  // namespace
