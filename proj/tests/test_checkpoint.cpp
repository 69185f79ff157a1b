#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "cmsa/checkpoint.hpp"
#include "cmsa/errors.hpp"
#include "cmsa/ops.hpp"

using namespace cmsa;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("checkpoint");

namespace {

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "cmsa_ckpt_test";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("round trip is bit exact") {
  std::mt19937_64 rng(5);
  std::vector<std::pair<std::string, Tensor>> tensors;
  tensors.emplace_back("alpha", random_normal({3, 4}, 1.0, rng));
  tensors.emplace_back("beta.gamma", random_normal({2, 2, 2}, 123.0, rng));
  tensors.emplace_back("scalar", Tensor::scalar(-0.0));
  tensors.emplace_back("tiny", Tensor::from_data({1}, {1e-308}));

  const fs::path path = temp_dir() / "roundtrip.bin";
  save_checkpoint(path, tensors);
  const auto loaded = load_checkpoint(path);

  REQUIRE(loaded.size() == tensors.size());
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    CHECK(loaded[i].first == tensors[i].first);
    REQUIRE(loaded[i].second.shape() == tensors[i].second.shape());
    const double* a = tensors[i].second.data();
    const double* b = loaded[i].second.data();
    for (std::size_t j = 0; j < tensors[i].second.size(); ++j) {
      // Compare representations, not values, so -0.0 and NaN patterns count.
      CHECK(std::memcmp(&a[j], &b[j], sizeof(double)) == 0);
    }
  }

  // Two saves of the same tensors are byte-identical.
  const fs::path path2 = temp_dir() / "roundtrip2.bin";
  save_checkpoint(path2, tensors);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
}

TEST_CASE("bad magic is a parse error") {
  const fs::path path = temp_dir() / "magic.bin";
  std::ofstream out(path, std::ios::binary);
  out << "NOTACKPT" << std::string(16, '\0');
  out.close();
  CHECK_THROWS_AS(load_checkpoint(path), ParseError);
}

TEST_CASE("truncated payload is a parse error naming the file") {
  const fs::path path = temp_dir() / "trunc.bin";
  save_checkpoint(path, {{"x", Tensor::from_data({4}, {1, 2, 3, 4})}});
  const auto size = fs::file_size(path);
  fs::resize_file(path, size - 9);
  try {
    load_checkpoint(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("trunc.bin") != std::string::npos);
  }
}

TEST_CASE("missing file is an io error") {
  CHECK_THROWS_AS(load_checkpoint(temp_dir() / "nope.bin"), IoError);
}

TEST_SUITE_END();
