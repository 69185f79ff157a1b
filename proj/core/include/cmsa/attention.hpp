#pragma once

#include <random>
#include <string>

#include "cmsa/tensor.hpp"

namespace cmsa {

/// Which (position, word) pairs a cell may attend to.
///   none       — attention skipped entirely, pure residual mean over words
///   word       — only pairs at the same position (attend across words)
///   pixel      — only pairs with the same word (attend across positions)
///   word_pixel — every pair, the full mechanism
enum class AttentionMode { none, word, pixel, word_pixel };

AttentionMode attention_mode_from_string(const std::string& s);
std::string to_string(AttentionMode mode);

struct CMSAParams {
  Tensor w_q;     // [d_k x C]
  Tensor w_k;     // [d_k x C]
  Tensor w_v;     // [d_k x C]
  Tensor w_vhat;  // [C x d_k]
  std::size_t d_k = 0;

  static CMSAParams init(std::size_t channels, std::size_t d_k, std::mt19937_64& rng);
};

struct AttentionOptions {
  AttentionMode mode = AttentionMode::word_pixel;
  /// Flips which operand supplies the query index in the score product
  /// (the alternative reading of the score equation); rows stay stochastic
  /// either way.
  bool transposed_scores = false;
  /// Optional 1/sqrt(d_k) score scaling; off by default.
  bool scale_scores = false;
};

struct QKV {
  Tensor q, k, v;  // each [(H*W*N) x d_k], rows ordered (p*N + n)
};

/// Linear projections of every (position, word) feature vector.
QKV project_qkv(const Tensor& multimodal, const CMSAParams& params);

/// Row-stochastic attention over all (position, word) pairs, restricted to
/// the support the mode allows. Row r = (p, n) holds the weights this cell
/// puts on every (p', n'); each row sums to 1.
Tensor attention_matrix(const Tensor& q, const Tensor& k, std::size_t h, std::size_t w,
                        std::size_t n, const AttentionOptions& options = {});

/// Full block: project, attend, map back, residual-add and average-pool the
/// word axis. Input [N x H x W x C] -> output [H x W x C]; the output shape
/// does not depend on N. AttentionMode::none bypasses attention and returns
/// the word-mean of the input.
Tensor cmsa_forward(const Tensor& multimodal, const CMSAParams& params,
                    const AttentionOptions& options = {});

}  // namespace cmsa
