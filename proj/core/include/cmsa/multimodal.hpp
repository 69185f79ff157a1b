#pragma once

#include <random>
#include <vector>

#include "cmsa/tensor.hpp"

namespace cmsa {

/// Constant [H x W x 8] grid of per-cell position features. For a cell in
/// column c, dims 0-2 hold the left edge, centre and right edge of the cell
/// mapped linearly so the whole image spans [-1, 1]; dims 3-5 are the same
/// vertically for its row; dims 6-7 hold 1/W and 1/H of the feature map.
Tensor spatial_coord_grid(std::size_t h, std::size_t w);

struct WordEmbeddingTable {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 0;
  Tensor table;  // [vocab_size x embed_dim], learnable

  static WordEmbeddingTable init(std::size_t vocab_size, std::size_t embed_dim,
                                 std::mt19937_64& rng);
};

/// Token lookup -> [N x embed_dim]; gradients flow only into selected rows.
Tensor embed(const std::vector<int>& tokens, const WordEmbeddingTable& table);

/// Joint feature map, one slice per word:
///   F[n, p] = concat(v_p / |v_p|, e_n / |e_n|, s_p)
/// with V in [H x W x C_v] layout, E in [N x C_l], S the coordinate grid.
/// Output is [N x H x W x (C_v + C_l + 8)].
Tensor build_multimodal(const Tensor& visual_hwc, const Tensor& embeddings, const Tensor& coords);

}  // namespace cmsa
