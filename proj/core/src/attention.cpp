#include "cmsa/attention.hpp"

#include <cmath>

#include "cmsa/errors.hpp"
#include "cmsa/ops.hpp"

namespace cmsa {

AttentionMode attention_mode_from_string(const std::string& s) {
  if (s == "none") return AttentionMode::none;
  if (s == "word") return AttentionMode::word;
  if (s == "pixel") return AttentionMode::pixel;
  if (s == "word_pixel") return AttentionMode::word_pixel;
  throw UsageError("unknown attention mode '" + s + "'");
}

std::string to_string(AttentionMode mode) {
  switch (mode) {
    case AttentionMode::none: return "none";
    case AttentionMode::word: return "word";
    case AttentionMode::pixel: return "pixel";
    case AttentionMode::word_pixel: return "word_pixel";
  }
  throw UsageError("unknown attention mode");
}

CMSAParams CMSAParams::init(std::size_t channels, std::size_t d_k, std::mt19937_64& rng) {
  if (channels == 0 || d_k == 0) throw DimError("cmsa params: zero extents");
  CMSAParams p;
  p.d_k = d_k;
  const double proj_std = std::sqrt(1.0 / static_cast<double>(channels));
  const double back_std = std::sqrt(1.0 / static_cast<double>(d_k));
  p.w_q = random_normal(Shape{d_k, channels}, proj_std, rng, true);
  p.w_k = random_normal(Shape{d_k, channels}, proj_std, rng, true);
  p.w_v = random_normal(Shape{d_k, channels}, proj_std, rng, true);
  p.w_vhat = random_normal(Shape{channels, d_k}, back_std, rng, true);
  return p;
}

namespace {

// [N x H x W x C] -> [(H*W*N) x C] with rows ordered (p*N + n).
Tensor flatten_pairs(const Tensor& multimodal) {
  const Shape& s = multimodal.shape();
  Tensor by_position = permute(multimodal, {1, 2, 0, 3});
  return reshape(by_position, Shape{s[1] * s[2] * s[0], s[3]});
}

// 0/1 support mask for the restricted modes; empty tensor when unrestricted.
Tensor support_mask(AttentionMode mode, std::size_t h, std::size_t w, std::size_t n) {
  if (mode == AttentionMode::word_pixel) return Tensor();
  const std::size_t m = h * w * n;
  std::vector<double> mask(m * m, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t rp = r / n;
    const std::size_t rn = r % n;
    for (std::size_t c = 0; c < m; ++c) {
      const std::size_t cp = c / n;
      const std::size_t cn = c % n;
      const bool keep = (mode == AttentionMode::word) ? (cp == rp) : (cn == rn);
      if (keep) mask[r * m + c] = 1.0;
    }
  }
  return Tensor::from_data(Shape{m, m}, std::move(mask));
}

}  // namespace

QKV project_qkv(const Tensor& multimodal, const CMSAParams& params) {
  if (multimodal.rank() != 4) throw DimError("project_qkv: expected [N,H,W,C] input");
  if (multimodal.shape()[3] != params.w_q.shape()[1]) {
    throw DimError("project_qkv: feature width " + std::to_string(multimodal.shape()[3]) +
                   " does not match projection width " + std::to_string(params.w_q.shape()[1]));
  }
  Tensor flat = flatten_pairs(multimodal);
  QKV out;
  out.q = matmul(flat, permute(params.w_q, {1, 0}));
  out.k = matmul(flat, permute(params.w_k, {1, 0}));
  out.v = matmul(flat, permute(params.w_v, {1, 0}));
  return out;
}

Tensor attention_matrix(const Tensor& q, const Tensor& k, std::size_t h, std::size_t w,
                        std::size_t n, const AttentionOptions& options) {
  if (q.rank() != 2 || k.rank() != 2 || q.shape() != k.shape()) {
    throw DimError("attention_matrix: q and k must share shape [(H*W*N) x d_k]");
  }
  if (q.shape()[0] != h * w * n) {
    throw DimError("attention_matrix: row count does not match H*W*N");
  }
  if (options.mode == AttentionMode::none) {
    throw UsageError("attention_matrix: mode 'none' has no attention matrix");
  }
  // Default reading scores row (p,n) against the queries of every (p',n');
  // the transposed flag swaps which operand plays the query role.
  Tensor scores = options.transposed_scores ? matmul(q, permute(k, {1, 0}))
                                            : matmul(k, permute(q, {1, 0}));
  if (options.scale_scores) {
    scores = scalar_mul(scores, 1.0 / std::sqrt(static_cast<double>(q.shape()[1])));
  }
  Tensor mask = support_mask(options.mode, h, w, n);
  return mask.defined() ? masked_softmax(scores, 1, mask) : softmax(scores, 1);
}

Tensor cmsa_forward(const Tensor& multimodal, const CMSAParams& params,
                    const AttentionOptions& options) {
  if (multimodal.rank() != 4) throw DimError("cmsa_forward: expected [N,H,W,C] input");
  const std::size_t n = multimodal.shape()[0];
  const std::size_t h = multimodal.shape()[1];
  const std::size_t w = multimodal.shape()[2];
  const std::size_t c = multimodal.shape()[3];

  if (options.mode == AttentionMode::none) return mean(multimodal, 0);

  Tensor flat = flatten_pairs(multimodal);
  QKV qkv = project_qkv(multimodal, params);
  Tensor attn = attention_matrix(qkv.q, qkv.k, h, w, n, options);
  Tensor attended = matmul(attn, qkv.v);
  Tensor residual = add(matmul(attended, permute(params.w_vhat, {1, 0})), flat);
  Tensor grouped = reshape(residual, Shape{h * w, n, c});
  return reshape(mean(grouped, 1), Shape{h, w, c});
}

}  // namespace cmsa
