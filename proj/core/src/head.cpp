#include "cmsa/head.hpp"

#include <cmath>

#include "cmsa/errors.hpp"
#include "cmsa/ops.hpp"

namespace cmsa {

HeadParams HeadParams::init(std::size_t fused_dim, std::mt19937_64& rng) {
  HeadParams p;
  const double stddev = std::sqrt(1.0 / (9.0 * static_cast<double>(fused_dim)));
  p.conv_w = random_normal(Shape{1, fused_dim, 3, 3}, stddev, rng, true);
  p.conv_b = Tensor::zeros(Shape{1}, true);
  return p;
}

Tensor predict(const std::array<Tensor, 3>& fused, const HeadParams& params) {
  for (const Tensor& f : fused) {
    if (f.shape() != fused[0].shape()) throw DimError("predict: fused levels must share shape");
  }
  Tensor total = add(add(fused[0], fused[1]), fused[2]);
  Tensor logits = conv2d(total, params.conv_w, params.conv_b);
  const std::size_t h = logits.shape()[1];
  const std::size_t w = logits.shape()[2];
  return sigmoid(reshape(logits, Shape{h, w}));
}

Tensor bce_loss(const Tensor& probabilities, const Tensor& target_mask) {
  if (probabilities.shape() != target_mask.shape()) {
    throw DimError("bce_loss: prediction shape " + shape_to_string(probabilities.shape()) +
                   " does not match mask shape " + shape_to_string(target_mask.shape()));
  }
  Tensor complement = add_scalar(scalar_mul(probabilities, -1.0), 1.0);
  Tensor inverse_mask = add_scalar(scalar_mul(target_mask, -1.0), 1.0);
  Tensor pos = hadamard(target_mask, log_clamped(probabilities));
  Tensor neg = hadamard(inverse_mask, log_clamped(complement));
  return scalar_mul(mean(add(pos, neg)), -1.0);
}

}  // namespace cmsa
