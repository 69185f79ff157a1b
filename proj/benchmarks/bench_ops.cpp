#include <benchmark/benchmark.h>

#include <random>

#include "cmsa/ops.hpp"

namespace {

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  cmsa::Tensor a = cmsa::random_normal({n, n}, 1.0, rng, false);
  cmsa::Tensor b = cmsa::random_normal({n, 64}, 1.0, rng, false);
  for (auto _ : state) {
    cmsa::Tensor c = cmsa::matmul(a, b);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * 64));
}
BENCHMARK(BM_Matmul)->Arg(256)->Arg(768)->Arg(1024);

void BM_MatmulBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  cmsa::Tensor a = cmsa::random_normal({n, n}, 1.0, rng, true);
  cmsa::Tensor b = cmsa::random_normal({n, 64}, 1.0, rng, true);
  for (auto _ : state) {
    cmsa::Tensor loss = cmsa::sum(cmsa::matmul(a, b));
    cmsa::backward(loss);
    a.zero_grad();
    b.zero_grad();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(3 * n * n * 64));
}
BENCHMARK(BM_MatmulBackward)->Arg(768);

void BM_Conv2d(benchmark::State& state) {
  std::mt19937_64 rng(1);
  cmsa::Tensor x = cmsa::random_normal({16, 16, 16}, 1.0, rng, false);
  cmsa::Tensor w = cmsa::random_normal({24, 16, 3, 3}, 0.1, rng, false);
  cmsa::Tensor b = cmsa::Tensor::zeros({24});
  for (auto _ : state) {
    cmsa::Tensor y = cmsa::conv2d(x, w, b);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_Conv2d);

void BM_Softmax(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  cmsa::Tensor x = cmsa::random_normal({n, n}, 3.0, rng, false);
  for (auto _ : state) {
    cmsa::Tensor y = cmsa::softmax(x, 1);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_Softmax)->Arg(768);

}  // namespace

BENCHMARK_MAIN();
