// Subprocess smoke test for the command line tool: gen -> train -> eval ->
// dump on a small configuration, plus the documented exit codes.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

namespace fs = std::filesystem;

namespace {

int failures = 0;

void expect(bool ok, const std::string& what) {
  if (ok) {
    std::printf("[ ok ] %s\n", what.c_str());
  } else {
    std::printf("[FAIL] %s\n", what.c_str());
    ++failures;
  }
}

int run(const std::string& args) {
  const std::string cmd = std::string(CMSA_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

int main() {
  const fs::path root = fs::temp_directory_path() / "cmsa_cli_smoke";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string small =
      "--set H=16 --set W=16 --set c1=4 --set c2=6 --set c3=8 --set d_k=8 "
      "--set D=8 --set C_l=6 --set n_objects_max=2";

  const fs::path data = root / "data";
  expect(run("gen --count 8 --seed 11 --out " + data.string() + " " + small) == 0, "gen exits 0");
  expect(fs::exists(data / "index.jsonl"), "gen writes index.jsonl");
  expect(fs::exists(data / "config.resolved"), "gen writes config.resolved");

  const fs::path run_a = root / "run_a";
  const fs::path run_b = root / "run_b";
  const std::string train_cfg = small + " --set T=12 --set batch_size=2 --set lr=1e-3";
  expect(run("train --data " + data.string() + " --out " + run_a.string() + " " + train_cfg) == 0,
         "train exits 0");
  expect(run("train --data " + data.string() + " --out " + run_b.string() + " " + train_cfg) == 0,
         "second train exits 0");
  expect(fs::exists(run_a / "ckpt.bin") && fs::exists(run_a / "loss.csv"),
         "train writes ckpt.bin and loss.csv");
  expect(slurp(run_a / "ckpt.bin") == slurp(run_b / "ckpt.bin"),
         "same seed/config gives bitwise-identical checkpoints");

  const fs::path eval_out = root / "eval";
  expect(run("eval --data " + data.string() + " --ckpt " + (run_a / "ckpt.bin").string() +
             " --out " + eval_out.string() + " " + small) == 0,
         "eval exits 0");
  expect(fs::exists(eval_out / "metrics.csv") && fs::exists(eval_out / "summary.txt"),
         "eval writes metrics.csv and summary.txt");

  const fs::path dump_out = root / "dump";
  expect(run("dump --data " + data.string() + " --ckpt " + (run_a / "ckpt.bin").string() +
             " --sample-id 3 --out " + dump_out.string() + " " + small) == 0,
         "dump exits 0");
  expect(fs::exists(dump_out / "masks" / "sample_00003_prob.pgm"), "dump writes probability pgm");
  expect(fs::exists(dump_out / "masks" / "sample_00003_mask.pbm"), "dump writes P4 mask");
  expect(fs::exists(dump_out / "attn" / "sample_00003_level1.csv"), "dump writes attention csv");

  // Error classes: 2 config, 3 data.
  expect(run("gen --count 2 --out " + (root / "x").string() + " --set bogus=1") == 2,
         "unknown config key exits 2");
  expect(run("train --data " + (root / "missing").string() + " --out " + (root / "y").string() +
             " " + train_cfg) == 3,
         "missing dataset exits 3");
  expect(run("eval --data " + data.string() + " --ckpt " + (root / "no.bin").string() +
             " --out " + (root / "z").string() + " " + small) == 3,
         "missing checkpoint exits 3");
  expect(run("gradcheck --bad-flag") == 2, "bad flag exits 2");

  if (failures == 0) {
    std::printf("cli smoke: all checks passed\n");
    return 0;
  }
  std::printf("cli smoke: %d failures\n", failures);
  return 1;
}
