#pragma once

#include <random>
#include <vector>

#include "cmsa/tensor.hpp"

namespace cmsa {

// Elementwise suite. All are shape-preserving; shape mismatches raise DimError.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scalar_mul(const Tensor& x, double c);
Tensor add_scalar(const Tensor& x, double c);
Tensor relu(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);

/// log(clamp(x, lo, hi)); the clamp keeps saturated probabilities away from
/// log(0) in the cross-entropy path. Gradient is 1/x inside the window and
/// 0 outside it.
Tensor log_clamped(const Tensor& x, double lo = 1e-12, double hi = 1.0);

/// x * s with a one-element tensor s; both operands receive gradients.
Tensor mul_by_scalar_tensor(const Tensor& x, const Tensor& s);

/// [M x K] * [K x P] -> [M x P]
Tensor matmul(const Tensor& a, const Tensor& b);

/// Zero-padded "same" convolution: x [C_in x H x W], w [C_out x C_in x k x k]
/// with odd k, bias [C_out]. With stride > 1 output extents shrink to
/// floor((ext + 2*(k-1)/2 - k) / stride) + 1.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, std::size_t stride = 1);

Tensor reshape(const Tensor& x, Shape shape);
Tensor permute(const Tensor& x, const std::vector<std::size_t>& perm);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);

/// Row gather: table [V x C], out[n] = table[ids[n]]. Gradients accumulate
/// into the selected rows (repeats add up). Out-of-range ids raise VocabError.
Tensor rows(const Tensor& table, const std::vector<int>& ids);

/// [C] -> [H x W x C], every cell a copy; backward sums over cells.
Tensor tile_spatial(const Tensor& channels, std::size_t h, std::size_t w);

/// [H x W] -> [C x H x W], every channel a copy; backward sums over channels.
Tensor broadcast_channels(const Tensor& plane, std::size_t c);

Tensor sum(const Tensor& x);
Tensor sum(const Tensor& x, std::size_t axis);
Tensor mean(const Tensor& x);
Tensor mean(const Tensor& x, std::size_t axis);

/// Max-subtracted softmax along `axis`; slices sum to 1 for any finite input.
Tensor softmax(const Tensor& x, std::size_t axis);

/// Softmax restricted to mask != 0 positions (mask is a constant tensor of
/// the same shape). Masked-out entries are exactly zero; each slice must
/// keep at least one supported entry.
Tensor masked_softmax(const Tensor& x, std::size_t axis, const Tensor& mask);

/// Scales every 1-D fibre along `axis` to unit L2 norm; fibres with norm
/// below eps come back as zeros (with zero gradient).
Tensor l2_normalize(const Tensor& x, std::size_t axis, double eps = 1e-12);

/// Seeded gaussian leaf, the building block for parameter init.
Tensor random_normal(Shape shape, double stddev, std::mt19937_64& rng, bool requires_grad = true);
Tensor random_uniform(Shape shape, double lo, double hi, std::mt19937_64& rng,
                      bool requires_grad = false);

}  // namespace cmsa
