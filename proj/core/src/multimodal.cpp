#include "cmsa/multimodal.hpp"

#include "cmsa/errors.hpp"
#include "cmsa/ops.hpp"

namespace cmsa {

Tensor spatial_coord_grid(std::size_t h, std::size_t w) {
  if (h == 0 || w == 0) throw DimError("spatial_coord_grid: extents must be positive");
  std::vector<double> data(h * w * 8);
  const double fw = static_cast<double>(w);
  const double fh = static_cast<double>(h);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      double* cell = data.data() + (r * w + c) * 8;
      const double col = static_cast<double>(c);
      const double row = static_cast<double>(r);
      cell[0] = 2.0 * col / fw - 1.0;
      cell[1] = (2.0 * col + 1.0) / fw - 1.0;
      cell[2] = 2.0 * (col + 1.0) / fw - 1.0;
      cell[3] = 2.0 * row / fh - 1.0;
      cell[4] = (2.0 * row + 1.0) / fh - 1.0;
      cell[5] = 2.0 * (row + 1.0) / fh - 1.0;
      cell[6] = 1.0 / fw;
      cell[7] = 1.0 / fh;
    }
  }
  return Tensor::from_data(Shape{h, w, 8}, std::move(data));
}

WordEmbeddingTable WordEmbeddingTable::init(std::size_t vocab_size, std::size_t embed_dim,
                                            std::mt19937_64& rng) {
  WordEmbeddingTable t;
  t.vocab_size = vocab_size;
  t.embed_dim = embed_dim;
  t.table = random_normal(Shape{vocab_size, embed_dim}, 0.5, rng, true);
  return t;
}

Tensor embed(const std::vector<int>& tokens, const WordEmbeddingTable& table) {
  if (tokens.empty()) throw UsageError("embed: empty token list");
  return rows(table.table, tokens);
}

Tensor build_multimodal(const Tensor& visual_hwc, const Tensor& embeddings, const Tensor& coords) {
  if (visual_hwc.rank() != 3) throw DimError("build_multimodal: visual features must be [H,W,C]");
  if (embeddings.rank() != 2) throw DimError("build_multimodal: embeddings must be [N,C_l]");
  if (coords.rank() != 3 || coords.shape()[2] != 8) {
    throw DimError("build_multimodal: coords must be [H,W,8]");
  }
  const std::size_t h = visual_hwc.shape()[0];
  const std::size_t w = visual_hwc.shape()[1];
  if (coords.shape()[0] != h || coords.shape()[1] != w) {
    throw DimError("build_multimodal: spatial extents of visual features " +
                   shape_to_string(visual_hwc.shape()) + " and coords " +
                   shape_to_string(coords.shape()) + " disagree");
  }
  const std::size_t n = embeddings.shape()[0];
  const std::size_t cv = visual_hwc.shape()[2];
  const std::size_t cl = embeddings.shape()[1];

  Tensor v_norm = l2_normalize(visual_hwc, 2);
  Tensor e_norm = l2_normalize(embeddings, 1);

  std::vector<Tensor> slices;
  slices.reserve(n);
  for (std::size_t word = 0; word < n; ++word) {
    Tensor e_row = reshape(rows(e_norm, {static_cast<int>(word)}), Shape{cl});
    Tensor e_tiled = tile_spatial(e_row, h, w);
    Tensor joint = concat({v_norm, e_tiled, coords}, 2);
    slices.push_back(reshape(joint, Shape{1, h, w, cv + cl + 8}));
  }
  return concat(slices, 0);
}

}  // namespace cmsa
