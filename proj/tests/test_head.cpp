#include <doctest.h>

#include <cmath>
#include <random>

#include "cmsa/errors.hpp"
#include "cmsa/gradcheck.hpp"
#include "cmsa/head.hpp"
#include "cmsa/ops.hpp"

using namespace cmsa;

TEST_SUITE_BEGIN("head");

namespace {

std::array<Tensor, 3> random_fused(std::mt19937_64& rng, double stddev = 1.0) {
  return {random_normal({4, 3, 3}, stddev, rng, true), random_normal({4, 3, 3}, stddev, rng, true),
          random_normal({4, 3, 3}, stddev, rng, true)};
}

}  // namespace

TEST_CASE("zero features with zero bias predict one half everywhere") {
  std::mt19937_64 rng(1);
  HeadParams params = HeadParams::init(4, rng);
  std::array<Tensor, 3> fused{Tensor::zeros({4, 3, 3}, true), Tensor::zeros({4, 3, 3}, true),
                              Tensor::zeros({4, 3, 3}, true)};
  Tensor p = predict(fused, params);
  REQUIRE(p.shape() == Shape{3, 3});
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(p.data()[i] == 0.5);
}

TEST_CASE("zero weights with bias b predict sigmoid(b) everywhere") {
  std::mt19937_64 rng(2);
  HeadParams params = HeadParams::init(4, rng);
  params.conv_w = Tensor::zeros({1, 4, 3, 3}, true);
  params.conv_b = Tensor::from_data({1}, {0.7}, true);
  Tensor p = predict(random_fused(rng), params);
  const double expected = 1.0 / (1.0 + std::exp(-0.7));
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(p.data()[i] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("predictions stay strictly inside (0,1)") {
  std::mt19937_64 rng(3);
  HeadParams params = HeadParams::init(4, rng);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor p = predict(random_fused(rng, 5.0), params);
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(p.data()[i] > 0.0);
      CHECK(p.data()[i] < 1.0);
    }
  }
}

TEST_CASE("prediction gradients match finite differences") {
  std::mt19937_64 rng(4);
  HeadParams params = HeadParams::init(4, rng);
  auto fused = random_fused(rng);
  auto check = check_op_gradients(
      "predict", [&] { return predict(fused, params); },
      {fused[0], fused[1], fused[2], params.conv_w, params.conv_b}, 1e-5, 1e-6, rng);
  CHECK_MESSAGE(check.pass, "max rel err ", check.max_rel_err);
}

TEST_CASE("uniform 0.5 prediction costs ln 2") {
  Tensor p = Tensor::full({2, 2}, 0.5);
  Tensor y = Tensor::from_data({2, 2}, {1, 0, 0, 1});
  CHECK(std::abs(bce_loss(p, y).item() - std::log(2.0)) <= 1e-12);
}

TEST_CASE("perfect prediction costs (almost) nothing") {
  Tensor y = Tensor::from_data({2, 2}, {1, 0, 0, 1});
  CHECK(bce_loss(y, y).item() <= 1e-10);
}

TEST_CASE("hand-evaluated loss") {
  Tensor p = Tensor::from_data({2}, {0.9, 0.2});
  Tensor y = Tensor::from_data({2}, {1, 0});
  const double expected = -(std::log(0.9) + std::log(0.8)) / 2.0;
  CHECK(bce_loss(p, y).item() == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(0.1643).epsilon(1e-3));
}

TEST_CASE("loss is non-negative and zero only at a match") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor p = random_uniform({3, 3}, 0.05, 0.95, rng);
    std::vector<double> mask(9);
    for (double& v : mask) v = rng() % 2 ? 1.0 : 0.0;
    Tensor y = Tensor::from_data({3, 3}, std::move(mask));
    CHECK(bce_loss(p, y).item() >= 0.0);
  }
}

TEST_CASE("logit gradient is (P - Y) / Omega") {
  std::mt19937_64 rng(6);
  Tensor logits = random_normal({3, 3}, 1.5, rng, true);
  std::vector<double> mask(9);
  for (double& v : mask) v = rng() % 2 ? 1.0 : 0.0;
  Tensor y = Tensor::from_data({3, 3}, std::move(mask));

  Tensor p = sigmoid(logits);
  backward(bce_loss(p, y));
  const auto& grad = logits.grad();
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double expected = (p.data()[i] - y.data()[i]) / 9.0;
    CHECK(std::abs(grad[i] - expected) <= 1e-10);
  }
}

TEST_CASE("shape mismatches are rejected") {
  CHECK_THROWS_AS(bce_loss(Tensor::zeros({2, 2}), Tensor::zeros({2, 3})), DimError);
}

TEST_SUITE_END();
