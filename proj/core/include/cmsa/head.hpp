#pragma once

#include <array>
#include <random>

#include "cmsa/tensor.hpp"

namespace cmsa {

struct HeadParams {
  Tensor conv_w;  // [1 x D x 3 x 3]
  Tensor conv_b;  // [1]

  static HeadParams init(std::size_t fused_dim, std::mt19937_64& rng);
};

/// P = sigmoid(conv3x3(sum_i F_o^i)), returned as an [H' x W'] map with
/// every entry strictly inside (0,1).
Tensor predict(const std::array<Tensor, 3>& fused, const HeadParams& params);

/// Mean binary cross-entropy over all pixels, with the log arguments
/// clamped away from zero. Always >= 0; 0 only for a perfect match (up to
/// clamping).
Tensor bce_loss(const Tensor& probabilities, const Tensor& target_mask);

}  // namespace cmsa
