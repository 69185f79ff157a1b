#include "cmsa/fusion.hpp"

#include <cmath>

#include "cmsa/errors.hpp"
#include "cmsa/ops.hpp"

namespace cmsa {

FusionMode fusion_mode_from_string(const std::string& s) {
  if (s == "gated") return FusionMode::gated;
  if (s == "self_gated") return FusionMode::self_gated;
  if (s == "none") return FusionMode::none;
  throw UsageError("unknown fusion mode '" + s + "'");
}

std::string to_string(FusionMode mode) {
  switch (mode) {
    case FusionMode::gated: return "gated";
    case FusionMode::self_gated: return "self_gated";
    case FusionMode::none: return "none";
  }
  throw UsageError("unknown fusion mode");
}

FusionParams FusionParams::init(const std::array<std::size_t, 3>& level_channels,
                                std::size_t fused_dim, std::mt19937_64& rng) {
  if (fused_dim == 0) throw DimError("fusion params: fused dim must be positive");
  FusionParams p;
  p.fused_dim = fused_dim;
  for (std::size_t i = 0; i < 3; ++i) {
    const std::size_t c = level_channels[i];
    const double proj_std = std::sqrt(1.0 / static_cast<double>(c));
    const double gate_std = std::sqrt(1.0 / static_cast<double>(fused_dim));
    p.level[i].proj_w = random_normal(Shape{fused_dim, c, 1, 1}, proj_std, rng, true);
    p.level[i].proj_b = Tensor::zeros(Shape{fused_dim}, true);
    p.level[i].mgate_w = random_normal(Shape{1, fused_dim, 1, 1}, gate_std, rng, true);
    p.level[i].mgate_b = Tensor::zeros(Shape{1}, true);
    p.level[i].rgate_w = random_normal(Shape{1, fused_dim, 1, 1}, gate_std, rng, true);
    p.level[i].rgate_b = Tensor::zeros(Shape{1}, true);
    p.gamma[i] = Tensor::full(Shape{1}, 1.0, true);
  }
  return p;
}

Tensor project_level(const Tensor& attentive_hwc, const FusionParams& params, std::size_t i) {
  if (i >= 3) throw UsageError("project_level: level index out of range");
  if (attentive_hwc.rank() != 3) throw DimError("project_level: expected [H,W,C] input");
  Tensor chw = permute(attentive_hwc, {2, 0, 1});
  return conv2d(chw, params.level[i].proj_w, params.level[i].proj_b);
}

LevelGates compute_gates(const Tensor& level_feature, const FusionParams& params, std::size_t i) {
  if (i >= 3) throw UsageError("compute_gates: level index out of range");
  if (level_feature.rank() != 3) throw DimError("compute_gates: expected [D,H,W] input");
  const std::size_t h = level_feature.shape()[1];
  const std::size_t w = level_feature.shape()[2];
  LevelGates g;
  g.memory = reshape(
      sigmoid(conv2d(level_feature, params.level[i].mgate_w, params.level[i].mgate_b)), Shape{h, w});
  g.reset = reshape(
      sigmoid(conv2d(level_feature, params.level[i].rgate_w, params.level[i].rgate_b)), Shape{h, w});
  return g;
}

namespace {

void check_levels(const std::array<Tensor, 3>& levels, const std::array<LevelGates, 3>& gates) {
  for (std::size_t i = 0; i < 3; ++i) {
    if (levels[i].rank() != 3) throw DimError("fuse: level features must be [D,H,W]");
    if (levels[i].shape() != levels[0].shape()) {
      throw DimError("fuse: all levels must share shape, got " +
                     shape_to_string(levels[i].shape()) + " vs " +
                     shape_to_string(levels[0].shape()));
    }
    const Shape plane{levels[i].shape()[1], levels[i].shape()[2]};
    if (gates[i].memory.shape() != plane || gates[i].reset.shape() != plane) {
      throw DimError("fuse: gate planes must match level spatial extents");
    }
  }
}

}  // namespace

std::array<Tensor, 3> fuse(const std::array<Tensor, 3>& levels,
                           const std::array<LevelGates, 3>& gates,
                           const std::array<Tensor, 3>& gamma) {
  check_levels(levels, gates);
  const std::size_t d = levels[0].shape()[0];

  std::array<Tensor, 3> memory_bc, gated_source;
  for (std::size_t j = 0; j < 3; ++j) {
    memory_bc[j] = broadcast_channels(gates[j].memory, d);
    gated_source[j] = mul_by_scalar_tensor(hadamard(memory_bc[j], levels[j]), gamma[j]);
  }

  std::array<Tensor, 3> fused;
  for (std::size_t i = 0; i < 3; ++i) {
    Tensor keep = add_scalar(scalar_mul(gates[i].memory, -1.0), 1.0);
    Tensor context = hadamard(broadcast_channels(keep, d), levels[i]);
    for (std::size_t j = 0; j < 3; ++j) {
      if (j != i) context = add(context, gated_source[j]);
    }
    Tensor reset_bc = broadcast_channels(gates[i].reset, d);
    Tensor pass = add_scalar(scalar_mul(gates[i].reset, -1.0), 1.0);
    fused[i] = add(hadamard(reset_bc, tanh(context)),
                   hadamard(broadcast_channels(pass, d), levels[i]));
  }
  return fused;
}

std::array<Tensor, 3> fuse_self_gated(const std::array<Tensor, 3>& levels,
                                      const std::array<LevelGates, 3>& gates) {
  check_levels(levels, gates);
  const std::size_t d = levels[0].shape()[0];
  std::array<Tensor, 3> fused;
  for (std::size_t i = 0; i < 3; ++i) {
    fused[i] = hadamard(broadcast_channels(gates[i].memory, d), levels[i]);
  }
  return fused;
}

}  // namespace cmsa
