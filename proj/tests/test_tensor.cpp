#include <doctest.h>

#include <random>

#include "cmsa/errors.hpp"
#include "cmsa/ops.hpp"
#include "cmsa/tensor.hpp"

using namespace cmsa;

TEST_SUITE_BEGIN("tensor");

TEST_CASE("shape bookkeeping") {
  Tensor t = Tensor::zeros({2, 3});
  CHECK(t.size() == 6);
  CHECK(t.rank() == 2);
  CHECK_FALSE(t.requires_grad());

  Tensor s = Tensor::scalar(4.5);
  CHECK(s.size() == 1);
  CHECK(s.item() == 4.5);
  CHECK_THROWS_AS(t.item(), UsageError);
  CHECK_THROWS_AS(Tensor::from_data({2, 2}, {1.0, 2.0, 3.0}), DimError);
}

TEST_CASE("backward of sum gives all-ones gradient") {
  Tensor x = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6}, true);
  backward(sum(x));
  for (double g : x.grad()) CHECK(g == 1.0);
}

TEST_CASE("backward of x*x at 3 gives 6") {
  Tensor x = Tensor::scalar(3.0, true);
  backward(hadamard(x, x));
  CHECK(x.grad()[0] == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("non-scalar loss is a usage error") {
  Tensor x = Tensor::from_data({2}, {1, 2}, true);
  CHECK_THROWS_AS(backward(add(x, x)), UsageError);
}

TEST_CASE("loss without a graph is a usage error") {
  Tensor x = Tensor::from_data({2}, {1, 2}, false);
  CHECK_THROWS_AS(backward(sum(x)), UsageError);
}

TEST_CASE("repeated backward without zeroing accumulates") {
  Tensor x = Tensor::scalar(2.0, true);
  Tensor loss = hadamard(x, x);
  backward(loss);
  backward(loss);
  CHECK(x.grad()[0] == doctest::Approx(8.0).epsilon(1e-12));
  x.zero_grad();
  backward(loss);
  CHECK(x.grad()[0] == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("a tensor used twice receives both contributions") {
  Tensor x = Tensor::from_data({2}, {1.0, 2.0}, true);
  // loss = sum(x + x) -> dloss/dx = 2
  backward(sum(add(x, x)));
  CHECK(x.grad()[0] == 2.0);
  CHECK(x.grad()[1] == 2.0);
}

TEST_CASE("backward_collect leaves the leaf grads untouched") {
  Tensor x = Tensor::from_data({3}, {1, 2, 3}, true);
  auto grads = backward_collect(sum(x));
  REQUIRE(grads.size() == 1);
  CHECK(grads[0].second == std::vector<double>{1, 1, 1});
  CHECK(x.grad() == std::vector<double>(3, 0.0));

  x.accumulate_grad(grads[0].second);
  CHECK(x.grad() == std::vector<double>(3, 1.0));
}

TEST_CASE("backward is bitwise deterministic") {
  auto run = [] {
    std::mt19937_64 rng(99);
    Tensor a = random_normal({6, 6}, 1.0, rng);
    Tensor b = random_normal({6, 6}, 1.0, rng);
    Tensor loss = sum(tanh(matmul(a, b)));
    backward(loss);
    std::vector<double> out = a.grad();
    out.insert(out.end(), b.grad().begin(), b.grad().end());
    return out;
  };
  const auto first = run();
  const auto second = run();
  REQUIRE(first.size() == second.size());
  for (std::size_t i = 0; i < first.size(); ++i) CHECK(first[i] == second[i]);
}

TEST_CASE("NoGradGuard suppresses graph construction") {
  Tensor x = Tensor::from_data({2}, {1, 2}, true);
  NoGradGuard guard;
  Tensor y = add(x, x);
  CHECK_FALSE(y.requires_grad());
}

TEST_SUITE_END();
