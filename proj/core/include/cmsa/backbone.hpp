#pragma once

#include <array>
#include <random>

#include "cmsa/tensor.hpp"

namespace cmsa {

/// Small convolutional pyramid producing three feature levels at a shared
/// 1/4 resolution. The stem downsamples twice with stride-2 convolutions;
/// the three blocks that follow keep resolution and feed each other, so the
/// levels are hierarchical.
struct BackboneParams {
  Tensor stem1_w, stem1_b;  // 3 -> c1, stride 2
  Tensor stem2_w, stem2_b;  // c1 -> c1, stride 2
  Tensor block1_w, block1_b;  // c1 -> c1
  Tensor block2_w, block2_b;  // c1 -> c2
  Tensor block3_w, block3_b;  // c2 -> c3
  std::array<std::size_t, 3> channels{16, 24, 32};

  static BackboneParams init(const std::array<std::size_t, 3>& channels, std::mt19937_64& rng);
};

/// image [3 x H x W] with H, W divisible by 4 -> levels at [c_i x H/4 x W/4].
std::array<Tensor, 3> backbone_forward(const Tensor& image, const BackboneParams& params);

}  // namespace cmsa
