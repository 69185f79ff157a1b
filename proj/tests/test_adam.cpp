#include <doctest.h>

#include <cmath>

#include "cmsa/adam.hpp"
#include "cmsa/ops.hpp"
#include "cmsa/tensor.hpp"

using namespace cmsa;

TEST_SUITE_BEGIN("adam");

TEST_CASE("zero gradient and zero weight decay leave parameters unchanged") {
  Tensor p = Tensor::from_data({3}, {1.0, -2.0, 0.5}, true);
  AdamConfig config;
  config.weight_decay = 0.0;
  AdamState adam({p}, config);
  adam.step();
  CHECK(p.values() == std::vector<double>{1.0, -2.0, 0.5});
}

TEST_CASE("poly schedule starts at the base rate and decays to zero") {
  Tensor p = Tensor::scalar(0.0, true);
  AdamConfig config;
  config.base_lr = 2.5e-4;
  config.poly_power = 0.9;
  config.max_steps = 100;
  AdamState adam({p}, config);

  CHECK(adam.lr() == doctest::Approx(2.5e-4).epsilon(1e-15));  // t = 0
  adam.step();
  CHECK(adam.lr() == doctest::Approx(2.5e-4 * std::pow(0.99, 0.9)).epsilon(1e-12));

  for (int i = 0; i < 150; ++i) adam.step();  // run past T
  CHECK(adam.lr() == 0.0);
}

TEST_CASE("one step with constant gradient matches the hand-evaluated update") {
  // With g = 1 at t = 1: m_hat = 1, v_hat = 1, so theta' = theta - lr/(1+eps).
  Tensor p = Tensor::scalar(3.0, true);
  AdamConfig config;
  config.base_lr = 0.1;
  config.poly_power = 0.9;
  config.max_steps = 10;
  config.weight_decay = 0.0;
  AdamState adam({p}, config);

  p.accumulate_grad({1.0});
  adam.step();
  const double expected = 3.0 - 0.1 / (1.0 + config.eps);
  CHECK(p.item() == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("decoupled weight decay shrinks parameters even with zero gradient") {
  Tensor p = Tensor::scalar(2.0, true);
  AdamConfig config;
  config.base_lr = 0.5;
  config.weight_decay = 0.1;
  config.max_steps = 10;
  AdamState adam({p}, config);
  adam.step();
  CHECK(p.item() == doctest::Approx(2.0 * (1.0 - 0.5 * 0.1)).epsilon(1e-12));
}

TEST_SUITE_END();
