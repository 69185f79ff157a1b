#include <benchmark/benchmark.h>

#include <random>

#include "cmsa/attention.hpp"
#include "cmsa/config.hpp"
#include "cmsa/head.hpp"
#include "cmsa/model.hpp"
#include "cmsa/ops.hpp"
#include "cmsa/synthdata.hpp"
#include "cmsa/tensor.hpp"

namespace {

cmsa::Sample make_sample(std::size_t n_words) {
  cmsa::GenConfig gen;
  gen.seed = 11;
  gen.count = 16;
  auto samples = cmsa::generate(gen);
  for (const auto& s : samples) {
    if (s.tokens.size() == n_words) return s;
  }
  cmsa::Sample s = samples[0];
  s.tokens.assign(n_words, cmsa::vocab::kSquare);
  return s;
}

void BM_CmsaForwardLevel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  cmsa::Tensor f = cmsa::random_normal({n, 16, 16, 56}, 1.0, rng, false);
  cmsa::CMSAParams params = cmsa::CMSAParams::init(56, 64, rng);
  for (auto _ : state) {
    cmsa::Tensor out = cmsa::cmsa_forward(f, params);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_CmsaForwardLevel)->Arg(2)->Arg(4);

void BM_ModelForward(benchmark::State& state) {
  cmsa::RunConfig config;
  cmsa::Model model(config);
  cmsa::Sample sample = make_sample(static_cast<std::size_t>(state.range(0)));
  cmsa::NoGradGuard no_grad;
  for (auto _ : state) {
    cmsa::Tensor p = model.forward(sample.image, sample.tokens);
    benchmark::DoNotOptimize(p.data());
  }
}
BENCHMARK(BM_ModelForward)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_ModelForwardBackward(benchmark::State& state) {
  cmsa::RunConfig config;
  cmsa::Model model(config);
  cmsa::Sample sample = make_sample(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    cmsa::Tensor loss = cmsa::bce_loss(model.forward(sample.image, sample.tokens), sample.mask);
    auto grads = cmsa::backward_collect(loss);
    benchmark::DoNotOptimize(grads.size());
  }
}
BENCHMARK(BM_ModelForwardBackward)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace
