#include <doctest.h>

#include <random>

#include "cmsa/backbone.hpp"
#include "cmsa/errors.hpp"
#include "cmsa/gradcheck.hpp"
#include "cmsa/ops.hpp"

using namespace cmsa;

TEST_SUITE_BEGIN("backbone");

TEST_CASE("shape contract: three levels at quarter resolution") {
  std::mt19937_64 rng(1);
  BackboneParams params = BackboneParams::init({16, 24, 32}, rng);
  Tensor image = random_normal({3, 16, 16}, 1.0, rng);
  const auto levels = backbone_forward(image, params);
  CHECK(levels[0].shape() == Shape{16, 4, 4});
  CHECK(levels[1].shape() == Shape{24, 4, 4});
  CHECK(levels[2].shape() == Shape{32, 4, 4});

  Tensor wide = random_normal({3, 8, 20}, 1.0, rng);
  const auto wide_levels = backbone_forward(wide, params);
  CHECK(wide_levels[2].shape() == Shape{32, 2, 5});
}

TEST_CASE("zero parameters produce zero features") {
  std::mt19937_64 rng(2);
  BackboneParams params = BackboneParams::init({4, 4, 4}, rng);
  params.stem1_w = Tensor::zeros({4, 3, 3, 3}, true);
  params.stem1_b = Tensor::zeros({4}, true);
  Tensor image = random_normal({3, 8, 8}, 1.0, rng);
  const auto levels = backbone_forward(image, params);
  for (const Tensor& level : levels) {
    for (std::size_t i = 0; i < level.size(); ++i) CHECK(level.data()[i] == 0.0);
  }
}

TEST_CASE("indivisible extents are rejected") {
  std::mt19937_64 rng(3);
  BackboneParams params = BackboneParams::init({4, 4, 4}, rng);
  CHECK_THROWS_AS(backbone_forward(Tensor::zeros({3, 10, 8}), params), DimError);
  CHECK_THROWS_AS(backbone_forward(Tensor::zeros({1, 8, 8}), params), DimError);
}

TEST_CASE("deterministic for a fixed seed") {
  auto build = [] {
    std::mt19937_64 rng(123);
    return BackboneParams::init({8, 8, 8}, rng);
  };
  BackboneParams a = build();
  BackboneParams b = build();
  for (std::size_t i = 0; i < a.stem1_w.size(); ++i) {
    CHECK(a.stem1_w.data()[i] == b.stem1_w.data()[i]);
  }
  CHECK(a.block3_w.data()[0] == b.block3_w.data()[0]);
}

TEST_CASE("gradients through the whole pyramid match finite differences") {
  std::mt19937_64 rng(4);
  BackboneParams params = BackboneParams::init({3, 4, 5}, rng);
  Tensor image = random_normal({3, 8, 8}, 1.0, rng, true);
  auto loss = [&] {
    const auto levels = backbone_forward(image, params);
    return concat({reshape(levels[0], {levels[0].size()}), reshape(levels[1], {levels[1].size()}),
                   reshape(levels[2], {levels[2].size()})},
                  0);
  };
  auto check = check_op_gradients(
      "backbone", loss,
      {image, params.stem1_w, params.stem2_w, params.block1_w, params.block2_w, params.block3_w,
       params.block2_b},
      1e-5, 1e-5, rng);
  CHECK_MESSAGE(check.pass, "max rel err ", check.max_rel_err);
}

TEST_SUITE_END();
