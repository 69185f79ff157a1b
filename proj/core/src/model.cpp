#include "cmsa/model.hpp"

#include <random>

#include "cmsa/errors.hpp"
#include "cmsa/ops.hpp"
#include "cmsa/synthdata.hpp"

namespace cmsa {

Model::Model(const RunConfig& config) : config_(config) {
  config_.validate();
  std::mt19937_64 rng(config_.seed);

  const std::array<std::size_t, 3> channels{config_.c1, config_.c2, config_.c3};
  backbone_ = BackboneParams::init(channels, rng);
  embedding_ = WordEmbeddingTable::init(vocab::size(), config_.embed_dim, rng);
  std::array<std::size_t, 3> level_widths;
  for (std::size_t i = 0; i < 3; ++i) level_widths[i] = channels[i] + config_.embed_dim + 8;
  for (std::size_t i = 0; i < 3; ++i) {
    attention_[i] = CMSAParams::init(level_widths[i], config_.d_k, rng);
  }
  fusion_ = FusionParams::init(level_widths, config_.fused_dim, rng);
  head_ = HeadParams::init(config_.fused_dim, rng);
  coords_ = spatial_coord_grid(config_.image_h / 4, config_.image_w / 4);

  named_.emplace_back("embed.table", embedding_.table);
  named_.emplace_back("backbone.stem1.w", backbone_.stem1_w);
  named_.emplace_back("backbone.stem1.b", backbone_.stem1_b);
  named_.emplace_back("backbone.stem2.w", backbone_.stem2_w);
  named_.emplace_back("backbone.stem2.b", backbone_.stem2_b);
  named_.emplace_back("backbone.block1.w", backbone_.block1_w);
  named_.emplace_back("backbone.block1.b", backbone_.block1_b);
  named_.emplace_back("backbone.block2.w", backbone_.block2_w);
  named_.emplace_back("backbone.block2.b", backbone_.block2_b);
  named_.emplace_back("backbone.block3.w", backbone_.block3_w);
  named_.emplace_back("backbone.block3.b", backbone_.block3_b);
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string prefix = "cmsa.l" + std::to_string(i + 1) + ".";
    named_.emplace_back(prefix + "wq", attention_[i].w_q);
    named_.emplace_back(prefix + "wk", attention_[i].w_k);
    named_.emplace_back(prefix + "wv", attention_[i].w_v);
    named_.emplace_back(prefix + "wvhat", attention_[i].w_vhat);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string prefix = "fusion.l" + std::to_string(i + 1) + ".";
    named_.emplace_back(prefix + "proj.w", fusion_.level[i].proj_w);
    named_.emplace_back(prefix + "proj.b", fusion_.level[i].proj_b);
    named_.emplace_back(prefix + "mgate.w", fusion_.level[i].mgate_w);
    named_.emplace_back(prefix + "mgate.b", fusion_.level[i].mgate_b);
    named_.emplace_back(prefix + "rgate.w", fusion_.level[i].rgate_w);
    named_.emplace_back(prefix + "rgate.b", fusion_.level[i].rgate_b);
    named_.emplace_back("fusion.gamma" + std::to_string(i + 1), fusion_.gamma[i]);
  }
  named_.emplace_back("head.conv.w", head_.conv_w);
  named_.emplace_back("head.conv.b", head_.conv_b);
}

std::array<Tensor, 3> Model::level_features(const Tensor& image, const std::vector<int>& tokens,
                                            std::array<Tensor, 3>* attention_out) const {
  if (tokens.empty()) throw UsageError("model: empty token list");
  std::vector<int> clipped = tokens;
  if (clipped.size() > config_.max_words) clipped.resize(config_.max_words);

  Tensor embedded = embed(clipped, embedding_);
  if (config_.sentence == SentenceMode::sentence) {
    embedded = reshape(mean(embedded, 0), Shape{1, config_.embed_dim});
  }

  AttentionOptions options;
  options.mode = config_.attention;
  options.transposed_scores = config_.softmax_transposed;
  options.scale_scores = config_.scale_scores;

  const auto levels = backbone_forward(image, backbone_);
  std::array<Tensor, 3> projected;
  for (std::size_t i = 0; i < 3; ++i) {
    Tensor visual = permute(levels[i], {1, 2, 0});
    Tensor multimodal = build_multimodal(visual, embedded, coords_);
    Tensor attentive = cmsa_forward(multimodal, attention_[i], options);
    projected[i] = project_level(attentive, fusion_, i);
    if (attention_out) {
      if (options.mode == AttentionMode::none) {
        (*attention_out)[i] = Tensor();
      } else {
        QKV qkv = project_qkv(multimodal, attention_[i]);
        (*attention_out)[i] = attention_matrix(qkv.q, qkv.k, multimodal.shape()[1],
                                               multimodal.shape()[2], multimodal.shape()[0],
                                               options);
      }
    }
  }
  return projected;
}

Tensor Model::forward(const Tensor& image, const std::vector<int>& tokens) const {
  const auto projected = level_features(image, tokens, nullptr);

  std::array<Tensor, 3> fused;
  switch (config_.fusion) {
    case FusionMode::gated: {
      std::array<LevelGates, 3> gates;
      for (std::size_t i = 0; i < 3; ++i) gates[i] = compute_gates(projected[i], fusion_, i);
      fused = fuse(projected, gates, fusion_.gamma);
      break;
    }
    case FusionMode::self_gated: {
      std::array<LevelGates, 3> gates;
      for (std::size_t i = 0; i < 3; ++i) gates[i] = compute_gates(projected[i], fusion_, i);
      fused = fuse_self_gated(projected, gates);
      break;
    }
    case FusionMode::none:
      fused = projected;
      break;
  }
  return predict(fused, head_);
}

Model::Trace Model::forward_trace(const Tensor& image, const std::vector<int>& tokens) const {
  Trace trace;
  std::array<Tensor, 3> attn;
  const auto projected = level_features(image, tokens, &attn);
  trace.attention = attn;

  std::array<Tensor, 3> fused;
  switch (config_.fusion) {
    case FusionMode::gated: {
      std::array<LevelGates, 3> gates;
      for (std::size_t i = 0; i < 3; ++i) gates[i] = compute_gates(projected[i], fusion_, i);
      fused = fuse(projected, gates, fusion_.gamma);
      break;
    }
    case FusionMode::self_gated: {
      std::array<LevelGates, 3> gates;
      for (std::size_t i = 0; i < 3; ++i) gates[i] = compute_gates(projected[i], fusion_, i);
      fused = fuse_self_gated(projected, gates);
      break;
    }
    case FusionMode::none:
      fused = projected;
      break;
  }
  trace.probability = predict(fused, head_);
  return trace;
}

std::vector<Tensor> Model::parameter_tensors() const {
  std::vector<Tensor> out;
  out.reserve(named_.size());
  for (const auto& [name, t] : named_) out.push_back(t);
  return out;
}

void Model::zero_grads() {
  for (auto& [name, t] : named_) t.zero_grad();
}

void Model::load_parameters(const std::vector<std::pair<std::string, Tensor>>& values) {
  if (values.size() != named_.size()) {
    throw ParseError("checkpoint: expected " + std::to_string(named_.size()) + " tensors, found " +
                     std::to_string(values.size()));
  }
  for (auto& [name, param] : named_) {
    const Tensor* found = nullptr;
    for (const auto& [vname, v] : values) {
      if (vname == name) found = &v;
    }
    if (!found) throw ParseError("checkpoint: missing parameter '" + name + "'");
    if (found->shape() != param.shape()) {
      throw ParseError("checkpoint: parameter '" + name + "' has shape " +
                       shape_to_string(found->shape()) + ", model expects " +
                       shape_to_string(param.shape()));
    }
    std::copy(found->data(), found->data() + found->size(), param.data());
  }
}

}  // namespace cmsa
