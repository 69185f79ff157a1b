#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cmsa/train.hpp"

using namespace cmsa;
namespace fs = std::filesystem;

namespace {

RunConfig tiny_config() {
  RunConfig config;
  config.image_h = 16;
  config.image_w = 16;
  config.c1 = 4;
  config.c2 = 6;
  config.c3 = 8;
  config.d_k = 8;
  config.fused_dim = 8;
  config.embed_dim = 6;
  config.iters = 30;
  config.batch_size = 2;
  config.lr = 2e-3;
  return config;
}

std::vector<Sample> tiny_data(const RunConfig& config, std::size_t count) {
  GenConfig gen;
  gen.seed = config.seed;
  gen.count = count;
  gen.height = config.image_h;
  gen.width = config.image_w;
  gen.n_objects_min = 1;
  gen.n_objects_max = 2;
  return generate(gen);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_SUITE_BEGIN("train");

TEST_CASE("short run learns something and writes its artifacts") {
  RunConfig config = tiny_config();
  const auto data = tiny_data(config, 6);
  const fs::path out = fs::temp_directory_path() / "cmsa_train_smoke";
  fs::remove_all(out);

  Model model(config);
  const TrainResult result = train_model(model, data, config, out);
  REQUIRE(result.losses.size() == config.iters);

  double early = 0.0, late = 0.0;
  for (std::size_t i = 0; i < 10; ++i) early += result.losses[i];
  for (std::size_t i = config.iters - 10; i < config.iters; ++i) late += result.losses[i];
  CHECK(late < early);

  CHECK(fs::exists(out / "loss.csv"));
  CHECK(fs::exists(out / "ckpt.bin"));
  CHECK(fs::exists(out / "config.resolved"));

  std::ifstream csv(out / "loss.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "iteration,loss,lr");
  std::size_t rows = 0;
  std::string line;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == config.iters);

  // Learning rate column follows the poly schedule.
  CHECK(result.lrs.front() == doctest::Approx(config.lr).epsilon(1e-15));
  CHECK(result.lrs.back() < config.lr);
}

TEST_CASE("two runs with the same seed produce identical checkpoints") {
  RunConfig config = tiny_config();
  const auto data = tiny_data(config, 5);
  const fs::path out_a = fs::temp_directory_path() / "cmsa_train_det_a";
  const fs::path out_b = fs::temp_directory_path() / "cmsa_train_det_b";
  fs::remove_all(out_a);
  fs::remove_all(out_b);

  Model model_a(config);
  train_model(model_a, data, config, out_a);
  Model model_b(config);
  train_model(model_b, data, config, out_b);

  CHECK(slurp(out_a / "ckpt.bin") == slurp(out_b / "ckpt.bin"));
  CHECK(slurp(out_a / "loss.csv") == slurp(out_b / "loss.csv"));
}

TEST_CASE("worker threads do not change the result") {
  RunConfig config = tiny_config();
  config.iters = 8;
  const auto data = tiny_data(config, 5);
  const fs::path out_single = fs::temp_directory_path() / "cmsa_train_thr1";
  const fs::path out_multi = fs::temp_directory_path() / "cmsa_train_thr4";
  fs::remove_all(out_single);
  fs::remove_all(out_multi);

  Model model_single(config);
  train_model(model_single, data, config, out_single);

  RunConfig threaded = config;
  threaded.threads = 4;
  Model model_multi(threaded);
  train_model(model_multi, data, threaded, out_multi);

  CHECK(slurp(out_single / "ckpt.bin") == slurp(out_multi / "ckpt.bin"));
}

TEST_SUITE_END();
