// Command line front end: dataset generation, training, evaluation,
// gradient checking and per-sample dumps.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration error,
// 3 data error, 4 numeric error.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cmsa/checkpoint.hpp"
#include "cmsa/config.hpp"
#include "cmsa/errors.hpp"
#include "cmsa/gradcheck.hpp"
#include "cmsa/head.hpp"
#include "cmsa/metrics.hpp"
#include "cmsa/model.hpp"
#include "cmsa/ops.hpp"
#include "cmsa/pnm.hpp"
#include "cmsa/synthdata.hpp"
#include "cmsa/train.hpp"

namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitUnexpected = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct ConfigArgs {
  std::string config_file;
  std::vector<std::string> overrides;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config", args.config_file, "key=value config file");
  cmd->add_option("--set", args.overrides, "config override, key=value (repeatable)");
}

cmsa::RunConfig resolve_config(const ConfigArgs& args) {
  cmsa::RunConfig config;
  if (!args.config_file.empty()) config.load_file(args.config_file);
  for (const std::string& kv : args.overrides) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      throw cmsa::ConfigError("--set expects key=value, got '" + kv + "'");
    }
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  config.validate();
  return config;
}

cmsa::Model restore_model(const cmsa::RunConfig& config, const fs::path& ckpt) {
  cmsa::Model model(config);
  model.load_parameters(cmsa::load_checkpoint(ckpt));
  return model;
}

int cmd_gen(const ConfigArgs& args, std::optional<std::uint64_t> seed, std::size_t count,
            const fs::path& out) {
  cmsa::RunConfig config = resolve_config(args);
  if (seed) config.seed = *seed;

  cmsa::GenConfig gen;
  gen.seed = config.seed;
  gen.count = count;
  gen.height = config.image_h;
  gen.width = config.image_w;
  gen.n_objects_min = config.n_objects_min;
  gen.n_objects_max = config.n_objects_max;

  const std::vector<cmsa::Sample> samples = cmsa::generate(gen);
  cmsa::save_dataset(out, samples);
  config.write_resolved(out / "config.resolved");
  std::cout << "wrote " << samples.size() << " samples to " << out.string() << "\n";
  return kExitOk;
}

int cmd_train(const ConfigArgs& args, const fs::path& data, const fs::path& out) {
  cmsa::RunConfig config = resolve_config(args);
  const std::vector<cmsa::Sample> samples = cmsa::load_dataset(data);
  if (samples.empty()) throw cmsa::ParseError(data.string() + ": dataset is empty");

  cmsa::Model model(config);
  const cmsa::TrainResult result = cmsa::train_model(model, samples, config, out);
  std::cout << "trained " << config.iters << " iterations, final loss "
            << result.losses.back() << ", checkpoint at " << (out / "ckpt.bin").string() << "\n";
  return kExitOk;
}

int cmd_eval(const ConfigArgs& args, const fs::path& data, const fs::path& ckpt,
             const fs::path& out) {
  cmsa::RunConfig config = resolve_config(args);
  const std::vector<cmsa::Sample> samples = cmsa::load_dataset(data);
  if (samples.empty()) throw cmsa::ParseError(data.string() + ": dataset is empty");

  cmsa::Model model = restore_model(config, ckpt);
  const cmsa::MetricsReport report = cmsa::evaluate(model, samples, config.threshold);

  fs::create_directories(out);
  config.write_resolved(out / "config.resolved");
  cmsa::write_metrics_csv(out / "metrics.csv", report);
  cmsa::write_summary(out / "summary.txt", report);
  std::printf("overall IoU %.4f, mean IoU %.4f over %zu samples\n", report.overall_iou,
              report.mean_iou, report.per_sample.size());
  return kExitOk;
}

int cmd_gradcheck(const ConfigArgs& args, std::optional<std::uint64_t> seed) {
  cmsa::RunConfig config = resolve_config(args);
  const std::uint64_t probe_seed = seed ? *seed : config.seed;

  const cmsa::GradCheckSuite suite = cmsa::run_gradcheck_suite(config, probe_seed);
  for (const cmsa::GradCheck& check : suite.checks) {
    std::printf("%-32s %s  max rel err %.3e (tol %.0e, %zu entries)\n", check.name.c_str(),
                check.pass ? "ok" : "FAIL", check.max_rel_err, check.tolerance, check.checked);
  }
  if (!suite.all_pass) {
    std::cerr << "gradient check failed\n";
    return kExitNumeric;
  }
  return kExitOk;
}

int cmd_dump(const ConfigArgs& args, const fs::path& data, const fs::path& ckpt, int sample_id,
             const fs::path& out) {
  cmsa::RunConfig config = resolve_config(args);
  const std::vector<cmsa::Sample> samples = cmsa::load_dataset(data);
  const cmsa::Sample* sample = nullptr;
  for (const cmsa::Sample& s : samples) {
    if (s.id == sample_id) sample = &s;
  }
  if (!sample) {
    throw cmsa::ParseError(data.string() + ": no sample with id " + std::to_string(sample_id));
  }

  cmsa::Model model = restore_model(config, ckpt);
  cmsa::NoGradGuard no_grad;
  const cmsa::Model::Trace trace = model.forward_trace(sample->image, sample->tokens);

  fs::create_directories(out / "masks");
  fs::create_directories(out / "attn");
  config.write_resolved(out / "config.resolved");

  char stem[64];
  std::snprintf(stem, sizeof(stem), "sample_%05d", sample_id);

  // Probability map, scaled to 8 bits.
  cmsa::PnmImage prob;
  prob.height = trace.probability.shape()[0];
  prob.width = trace.probability.shape()[1];
  prob.channels = 1;
  prob.pixels.resize(prob.height * prob.width);
  const double* pp = trace.probability.data();
  for (std::size_t i = 0; i < prob.pixels.size(); ++i) {
    prob.pixels[i] = static_cast<std::uint8_t>(std::lround(pp[i] * 255.0));
  }
  cmsa::write_pgm(out / "masks" / (std::string(stem) + "_prob.pgm"), prob);

  std::vector<std::uint8_t> bits(prob.pixels.size());
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = pp[i] > config.threshold ? 1 : 0;
  cmsa::write_pbm(out / "masks" / (std::string(stem) + "_mask.pbm"), prob.width, prob.height, bits);
  cmsa::write_pbm(out / "masks" / (std::string(stem) + "_mask_ascii.pbm"), prob.width, prob.height,
                  bits, /*ascii=*/true);

  for (std::size_t level = 0; level < 3; ++level) {
    const cmsa::Tensor& attn = trace.attention[level];
    if (!attn.defined()) continue;
    char name[96];
    std::snprintf(name, sizeof(name), "%s_level%zu.csv", stem, level + 1);
    std::ofstream csv(out / "attn" / name, std::ios::trunc);
    if (!csv) throw cmsa::IoError("cannot write attention CSV");
    csv << "row,col,score\n";
    const double* pa = attn.data();
    const std::size_t m = attn.shape()[0];
    char row[80];
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t c = 0; c < m; ++c) {
        std::snprintf(row, sizeof(row), "%zu,%zu,%.12g\n", r, c, pa[r * m + c]);
        csv << row;
      }
    }
  }
  std::cout << "dumped sample " << sample_id << " (\"" << cmsa::vocab::decode(sample->tokens)
            << "\") to " << out.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-modal self-attention segmentation at desk scale"};
  app.require_subcommand(1);

  ConfigArgs gen_cfg, train_cfg, eval_cfg, grad_cfg, dump_cfg;
  std::optional<std::uint64_t> gen_seed, grad_seed;
  std::size_t gen_count = 100;
  std::string gen_out, train_data, train_out, eval_data, eval_ckpt, eval_out;
  std::string dump_data, dump_ckpt, dump_out;
  int dump_sample_id = 0;

  CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
  add_config_options(gen, gen_cfg);
  gen->add_option("--seed", gen_seed, "generation seed (overrides config)");
  gen->add_option("--count", gen_count, "number of samples")->required();
  gen->add_option("--out", gen_out, "output dataset directory")->required();

  CLI::App* train = app.add_subcommand("train", "Train a model");
  add_config_options(train, train_cfg);
  train->add_option("--data", train_data, "dataset directory")->required();
  train->add_option("--out", train_out, "run output directory")->required();

  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  add_config_options(eval, eval_cfg);
  eval->add_option("--data", eval_data, "dataset directory")->required();
  eval->add_option("--ckpt", eval_ckpt, "checkpoint file")->required();
  eval->add_option("--out", eval_out, "output directory")->required();

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  add_config_options(gradcheck, grad_cfg);
  gradcheck->add_option("--seed", grad_seed, "probe seed (defaults to config seed)");

  CLI::App* dump = app.add_subcommand("dump", "Dump masks and attention for one sample");
  add_config_options(dump, dump_cfg);
  dump->add_option("--data", dump_data, "dataset directory")->required();
  dump->add_option("--ckpt", dump_ckpt, "checkpoint file")->required();
  dump->add_option("--sample-id", dump_sample_id, "sample id")->required();
  dump->add_option("--out", dump_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (gen->parsed()) return cmd_gen(gen_cfg, gen_seed, gen_count, gen_out);
    if (train->parsed()) return cmd_train(train_cfg, train_data, train_out);
    if (eval->parsed()) return cmd_eval(eval_cfg, eval_data, eval_ckpt, eval_out);
    if (gradcheck->parsed()) return cmd_gradcheck(grad_cfg, grad_seed);
    if (dump->parsed()) return cmd_dump(dump_cfg, dump_data, dump_ckpt, dump_sample_id, dump_out);
  } catch (const cmsa::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const cmsa::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const cmsa::ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const cmsa::VocabError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const cmsa::GenError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const cmsa::IoError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const cmsa::DimError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUnexpected;
  }
  return kExitUnexpected;
}
