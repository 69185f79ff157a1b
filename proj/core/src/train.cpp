#include "cmsa/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <thread>

#include "cmsa/adam.hpp"
#include "cmsa/checkpoint.hpp"
#include "cmsa/errors.hpp"
#include "cmsa/head.hpp"
#include "cmsa/ops.hpp"

namespace cmsa {

namespace {

struct SamplePass {
  double loss = 0.0;
  std::vector<std::pair<Tensor, std::vector<double>>> grads;
};

SamplePass run_sample(const Model& model, const Sample& sample, double inv_batch) {
  SamplePass pass;
  Tensor prob = model.forward(sample.image, sample.tokens);
  Tensor loss = bce_loss(prob, sample.mask);
  pass.loss = loss.item();
  pass.grads = backward_collect(scalar_mul(loss, inv_batch));
  return pass;
}

}  // namespace

TrainResult train_model(Model& model, const std::vector<Sample>& data, const RunConfig& config,
                        const std::filesystem::path& out_dir) {
  if (data.empty()) throw UsageError("train: empty dataset");
  std::filesystem::create_directories(out_dir);
  config.write_resolved(out_dir / "config.resolved");

  AdamConfig adam_config;
  adam_config.weight_decay = config.weight_decay;
  adam_config.base_lr = config.lr;
  adam_config.poly_power = config.poly_power;
  adam_config.max_steps = config.iters;
  AdamState adam(model.parameter_tensors(), adam_config);

  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  const std::size_t batch = config.batch_size;
  const double inv_batch = 1.0 / static_cast<double>(batch);
  const std::size_t workers = std::min(config.threads, batch);

  TrainResult result;
  result.losses.reserve(config.iters);
  result.lrs.reserve(config.iters);

  std::ofstream loss_csv(out_dir / "loss.csv", std::ios::trunc);
  if (!loss_csv) throw IoError("cannot write " + (out_dir / "loss.csv").string());
  loss_csv << "iteration,loss,lr\n";

  for (std::size_t iter = 0; iter < config.iters; ++iter) {
    std::vector<std::size_t> indices(batch);
    for (std::size_t b = 0; b < batch; ++b) indices[b] = pick(rng);

    std::vector<SamplePass> passes(batch);
    if (workers <= 1) {
      for (std::size_t b = 0; b < batch; ++b) {
        passes[b] = run_sample(model, data[indices[b]], inv_batch);
      }
    } else {
      std::vector<std::thread> pool;
      pool.reserve(workers);
      for (std::size_t t = 0; t < workers; ++t) {
        pool.emplace_back([&, t]() {
          for (std::size_t b = t; b < batch; b += workers) {
            passes[b] = run_sample(model, data[indices[b]], inv_batch);
          }
        });
      }
      for (auto& th : pool) th.join();
    }

    // Reduce in batch order; results do not depend on the worker count.
    double batch_loss = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      batch_loss += passes[b].loss;
      for (auto& [param, grad] : passes[b].grads) param.accumulate_grad(grad);
    }
    batch_loss *= inv_batch;
    if (!std::isfinite(batch_loss)) {
      throw NumericError("training: non-finite loss at iteration " + std::to_string(iter));
    }

    const double rate = adam.lr();
    adam.step();
    model.zero_grads();

    result.losses.push_back(batch_loss);
    result.lrs.push_back(rate);
    char row[96];
    std::snprintf(row, sizeof(row), "%zu,%.9g,%.9g\n", iter, batch_loss, rate);
    loss_csv << row;
  }
  if (!loss_csv) throw IoError("short write to " + (out_dir / "loss.csv").string());
  loss_csv.close();

  save_checkpoint(out_dir / "ckpt.bin", model.parameters());
  return result;
}

}  // namespace cmsa
