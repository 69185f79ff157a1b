#pragma once

#include <array>
#include <random>
#include <string>
#include <utility>

#include "cmsa/tensor.hpp"

namespace cmsa {

/// How the three level features are combined before the head.
///   gated      — memory/reset gates with cross-level exchange
///   self_gated — each level multiplied by its own memory gate only
///   none       — level features passed through untouched
enum class FusionMode { gated, self_gated, none };

FusionMode fusion_mode_from_string(const std::string& s);
std::string to_string(FusionMode mode);

struct LevelFusionParams {
  Tensor proj_w, proj_b;    // 1x1 conv, level channels -> D
  Tensor mgate_w, mgate_b;  // 1x1 conv, D -> 1
  Tensor rgate_w, rgate_b;  // 1x1 conv, D -> 1
};

struct FusionParams {
  std::array<LevelFusionParams, 3> level;
  std::array<Tensor, 3> gamma;  // one learnable scalar per source level
  std::size_t fused_dim = 0;    // D

  static FusionParams init(const std::array<std::size_t, 3>& level_channels, std::size_t fused_dim,
                           std::mt19937_64& rng);
};

struct LevelGates {
  Tensor memory;  // [H' x W'], entries in (0,1)
  Tensor reset;   // [H' x W'], entries in (0,1)
};

/// 1x1 projection of a [H x W x C_i] attentive feature map to [D x H x W].
Tensor project_level(const Tensor& attentive_hwc, const FusionParams& params, std::size_t i);

/// Memory and reset gates for level i, each one sigmoid(1x1 conv) plane.
/// Gate computation is per level; no cross-level inputs.
LevelGates compute_gates(const Tensor& level_feature, const FusionParams& params, std::size_t i);

/// The gated exchange:
///   G^i   = (1 - m^i) ⊙ X^i + Σ_{j≠i} γ^j m^j ⊙ X^j
///   F_o^i = r^i ⊙ tanh(G^i) + (1 - r^i) ⊙ X^i
/// Gates broadcast across the channel axis.
std::array<Tensor, 3> fuse(const std::array<Tensor, 3>& levels,
                           const std::array<LevelGates, 3>& gates,
                           const std::array<Tensor, 3>& gamma);

/// Ablation: each level scaled by its own memory gate, no exchange.
std::array<Tensor, 3> fuse_self_gated(const std::array<Tensor, 3>& levels,
                                      const std::array<LevelGates, 3>& gates);

}  // namespace cmsa
