#include <doctest.h>

#include <cmath>
#include <random>

#include "cmsa/errors.hpp"
#include "cmsa/gradcheck.hpp"
#include "cmsa/multimodal.hpp"
#include "cmsa/ops.hpp"

using namespace cmsa;

TEST_SUITE_BEGIN("multimodal");

TEST_CASE("single-cell grid spans the image") {
  Tensor g = spatial_coord_grid(1, 1);
  REQUIRE(g.shape() == Shape{1, 1, 8});
  const std::vector<double> expected{-1, 0, 1, -1, 0, 1, 1, 1};
  for (std::size_t i = 0; i < 8; ++i) CHECK(g.data()[i] == doctest::Approx(expected[i]));
}

TEST_CASE("two-column grid: left cell covers the left half") {
  Tensor g = spatial_coord_grid(1, 2);
  CHECK(g.at({0, 0, 0}) == doctest::Approx(-1.0));
  CHECK(g.at({0, 0, 1}) == doctest::Approx(-0.5));
  CHECK(g.at({0, 0, 2}) == doctest::Approx(0.0));
}

TEST_CASE("grid values stay in [-1,1] and dims 6-7 carry 1/W, 1/H") {
  for (auto [h, w] : {std::pair<std::size_t, std::size_t>{3, 5}, {8, 2}, {16, 16}}) {
    Tensor g = spatial_coord_grid(h, w);
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        for (std::size_t d = 0; d < 6; ++d) {
          const double v = g.at({r, c, d});
          CHECK(v >= -1.0);
          CHECK(v <= 1.0);
        }
        CHECK(g.at({r, c, 6}) == doctest::Approx(1.0 / static_cast<double>(w)));
        CHECK(g.at({r, c, 7}) == doctest::Approx(1.0 / static_cast<double>(h)));
      }
    }
  }
}

TEST_CASE("embedding lookup selects rows") {
  WordEmbeddingTable table;
  table.vocab_size = 2;
  table.embed_dim = 2;
  table.table = Tensor::from_data({2, 2}, {1, 2, 7, 8}, true);

  Tensor e = embed({0}, table);
  CHECK(e.at({0, 0}) == 1.0);
  CHECK(e.at({0, 1}) == 2.0);

  Tensor twice = embed({1, 1}, table);
  CHECK(twice.at({0, 0}) == twice.at({1, 0}));
  backward(sum(twice));
  CHECK(table.table.grad()[2] == 2.0);

  CHECK_THROWS_AS(embed({5}, table), VocabError);
}

TEST_CASE("embedding gradients match finite differences") {
  std::mt19937_64 rng(3);
  WordEmbeddingTable table = WordEmbeddingTable::init(6, 4, rng);
  auto check = check_op_gradients(
      "embed", [&] { return embed({2, 5, 2}, table); }, {table.table}, 1e-5, 1e-6, rng);
  CHECK_MESSAGE(check.pass, "max rel err ", check.max_rel_err);
}

TEST_CASE("single-cell joint feature composes the forced sub-vectors") {
  Tensor visual = Tensor::from_data({1, 1, 2}, {3, 4});
  Tensor embeddings = Tensor::from_data({1, 2}, {0, 1});
  Tensor coords = spatial_coord_grid(1, 1);
  Tensor f = build_multimodal(visual, embeddings, coords);
  REQUIRE(f.shape() == Shape{1, 1, 1, 12});
  const std::vector<double> expected{0.6, 0.8, 0, 1, -1, 0, 1, -1, 0, 1, 1, 1};
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(f.data()[i] == doctest::Approx(expected[i]).epsilon(1e-12));
  }
}

TEST_CASE("identical words produce identical slices") {
  std::mt19937_64 rng(11);
  Tensor visual = random_normal({2, 3, 4}, 1.0, rng);
  Tensor e_row = random_normal({1, 5}, 1.0, rng);
  Tensor embeddings = concat({e_row, e_row}, 0);
  Tensor f = build_multimodal(visual, embeddings, spatial_coord_grid(2, 3));
  const std::size_t slice = f.size() / 2;
  for (std::size_t i = 0; i < slice; ++i) CHECK(f.data()[i] == f.data()[slice + i]);
}

TEST_CASE("visual and embedding sub-slices come out unit length") {
  std::mt19937_64 rng(23);
  Tensor visual = random_normal({3, 2, 4}, 2.0, rng);
  Tensor embeddings = random_normal({2, 5}, 2.0, rng);
  Tensor f = build_multimodal(visual, embeddings, spatial_coord_grid(3, 2));
  for (std::size_t n = 0; n < 2; ++n) {
    for (std::size_t r = 0; r < 3; ++r) {
      for (std::size_t c = 0; c < 2; ++c) {
        double vis = 0.0, emb = 0.0;
        for (std::size_t d = 0; d < 4; ++d) vis += f.at({n, r, c, d}) * f.at({n, r, c, d});
        for (std::size_t d = 4; d < 9; ++d) emb += f.at({n, r, c, d}) * f.at({n, r, c, d});
        CHECK(std::abs(std::sqrt(vis) - 1.0) <= 1e-9);
        CHECK(std::abs(std::sqrt(emb) - 1.0) <= 1e-9);
      }
    }
  }
}

TEST_CASE("channel layout is visual, then linguistic, then spatial") {
  // Sentinels: visual channels 5.0 (norm -> 1/sqrt(2) entries), embedding
  // 7.0, coords are deterministic; plant and read back by offset.
  Tensor visual = Tensor::full({1, 1, 2}, 5.0);
  Tensor embeddings = Tensor::full({1, 3}, 7.0);
  Tensor f = build_multimodal(visual, embeddings, spatial_coord_grid(1, 1));
  REQUIRE(f.shape()[3] == 2 + 3 + 8);
  CHECK(f.data()[0] == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(f.data()[1] == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(f.data()[2] == doctest::Approx(1.0 / std::sqrt(3.0)));
  CHECK(f.data()[4] == doctest::Approx(1.0 / std::sqrt(3.0)));
  CHECK(f.data()[5] == doctest::Approx(-1.0));  // first coord dim
}

TEST_CASE("permuting embedding rows permutes the word axis identically") {
  std::mt19937_64 rng(31);
  Tensor visual = random_normal({2, 2, 3}, 1.0, rng);
  Tensor embeddings = random_normal({3, 4}, 1.0, rng);
  Tensor coords = spatial_coord_grid(2, 2);

  Tensor f = build_multimodal(visual, embeddings, coords);

  // Swap rows 0 and 2 of E.
  std::vector<double> swapped(embeddings.values());
  for (std::size_t d = 0; d < 4; ++d) std::swap(swapped[d], swapped[2 * 4 + d]);
  Tensor f_swapped =
      build_multimodal(visual, Tensor::from_data({3, 4}, std::move(swapped)), coords);

  const std::size_t slice = f.size() / 3;
  for (std::size_t i = 0; i < slice; ++i) {
    CHECK(f.data()[i] == f_swapped.data()[2 * slice + i]);
    CHECK(f.data()[2 * slice + i] == f_swapped.data()[i]);
    CHECK(f.data()[slice + i] == f_swapped.data()[slice + i]);
  }
}

TEST_CASE("mismatched extents are rejected") {
  Tensor visual = Tensor::zeros({2, 2, 3});
  Tensor embeddings = Tensor::zeros({1, 4});
  CHECK_THROWS_AS(build_multimodal(visual, embeddings, spatial_coord_grid(3, 2)), DimError);
}

TEST_CASE("joint features are reproducible bitwise") {
  std::mt19937_64 rng(77);
  Tensor visual = random_normal({2, 2, 3}, 1.0, rng);
  Tensor embeddings = random_normal({2, 4}, 1.0, rng);
  Tensor coords = spatial_coord_grid(2, 2);
  Tensor a = build_multimodal(visual, embeddings, coords);
  Tensor b = build_multimodal(visual, embeddings, coords);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.data()[i] == b.data()[i]);
}

TEST_SUITE_END();
