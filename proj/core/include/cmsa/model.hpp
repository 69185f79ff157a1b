#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "cmsa/attention.hpp"
#include "cmsa/backbone.hpp"
#include "cmsa/config.hpp"
#include "cmsa/fusion.hpp"
#include "cmsa/head.hpp"
#include "cmsa/multimodal.hpp"
#include "cmsa/tensor.hpp"

namespace cmsa {

/// The full network: backbone levels -> multimodal features -> per-level
/// cross-modal self-attention -> gated fusion -> prediction head.
/// Parameters are created once (seeded by the config) and shared by every
/// forward pass; each pass builds a fresh graph.
class Model {
 public:
  explicit Model(const RunConfig& config);

  /// image [3 x H x W], tokens from the closed vocabulary (right-truncated
  /// at max_words) -> probability map [H/4 x W/4].
  Tensor forward(const Tensor& image, const std::vector<int>& tokens) const;

  struct Trace {
    Tensor probability;
    std::array<Tensor, 3> attention;  // undefined tensors when mode == none
  };
  Trace forward_trace(const Tensor& image, const std::vector<int>& tokens) const;

  const RunConfig& config() const { return config_; }
  const std::vector<std::pair<std::string, Tensor>>& parameters() const { return named_; }
  std::vector<Tensor> parameter_tensors() const;
  void zero_grads();

  /// Overwrite parameter values from a checkpoint; names and shapes must
  /// match this model exactly.
  void load_parameters(const std::vector<std::pair<std::string, Tensor>>& values);

 private:
  std::array<Tensor, 3> level_features(const Tensor& image,
                                       const std::vector<int>& tokens,
                                       std::array<Tensor, 3>* attention_out) const;

  RunConfig config_;
  BackboneParams backbone_;
  WordEmbeddingTable embedding_;
  std::array<CMSAParams, 3> attention_;
  FusionParams fusion_;
  HeadParams head_;
  Tensor coords_;  // constant grid at feature resolution
  std::vector<std::pair<std::string, Tensor>> named_;
};

}  // namespace cmsa
