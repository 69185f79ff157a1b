#include "cmsa/backbone.hpp"

#include <cmath>

#include "cmsa/errors.hpp"
#include "cmsa/ops.hpp"

namespace cmsa {

namespace {

Tensor he_conv(std::size_t out_c, std::size_t in_c, std::size_t k, std::mt19937_64& rng) {
  const double stddev = std::sqrt(2.0 / (static_cast<double>(in_c) * k * k));
  return random_normal(Shape{out_c, in_c, k, k}, stddev, rng, true);
}

}  // namespace

BackboneParams BackboneParams::init(const std::array<std::size_t, 3>& channels,
                                    std::mt19937_64& rng) {
  if (channels[0] > channels[1] || channels[1] > channels[2]) {
    throw DimError("backbone: level channels must be non-decreasing");
  }
  BackboneParams p;
  p.channels = channels;
  p.stem1_w = he_conv(channels[0], 3, 3, rng);
  p.stem1_b = Tensor::zeros(Shape{channels[0]}, true);
  p.stem2_w = he_conv(channels[0], channels[0], 3, rng);
  p.stem2_b = Tensor::zeros(Shape{channels[0]}, true);
  p.block1_w = he_conv(channels[0], channels[0], 3, rng);
  p.block1_b = Tensor::zeros(Shape{channels[0]}, true);
  p.block2_w = he_conv(channels[1], channels[0], 3, rng);
  p.block2_b = Tensor::zeros(Shape{channels[1]}, true);
  p.block3_w = he_conv(channels[2], channels[1], 3, rng);
  p.block3_b = Tensor::zeros(Shape{channels[2]}, true);
  return p;
}

std::array<Tensor, 3> backbone_forward(const Tensor& image, const BackboneParams& params) {
  if (image.rank() != 3 || image.shape()[0] != 3) {
    throw DimError("backbone: expected [3,H,W] image, got " + shape_to_string(image.shape()));
  }
  if (image.shape()[1] % 4 != 0 || image.shape()[2] % 4 != 0) {
    throw DimError("backbone: image extents must be divisible by 4, got " +
                   shape_to_string(image.shape()));
  }
  Tensor stem = relu(conv2d(image, params.stem1_w, params.stem1_b, 2));
  stem = relu(conv2d(stem, params.stem2_w, params.stem2_b, 2));
  Tensor level1 = relu(conv2d(stem, params.block1_w, params.block1_b));
  Tensor level2 = relu(conv2d(level1, params.block2_w, params.block2_b));
  Tensor level3 = relu(conv2d(level2, params.block3_w, params.block3_b));
  return {level1, level2, level3};
}

}  // namespace cmsa
