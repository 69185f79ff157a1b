#pragma once

#include <filesystem>
#include <vector>

#include "cmsa/config.hpp"
#include "cmsa/model.hpp"
#include "cmsa/synthdata.hpp"

namespace cmsa {

struct TrainResult {
  std::vector<double> losses;  // batch-mean BCE per iteration
  std::vector<double> lrs;
};

/// Batched training: every iteration draws batch_size samples, accumulates
/// their gradients in batch order, then applies one Adam step under the
/// poly schedule. Writes loss.csv, ckpt.bin and config.resolved into
/// out_dir. With config.threads > 1 the per-sample passes run on worker
/// threads; gradients still reduce in batch order, so outputs are
/// bit-identical to a single-threaded run. Raises NumericError naming the
/// iteration if the loss leaves the finite range.
TrainResult train_model(Model& model, const std::vector<Sample>& data, const RunConfig& config,
                        const std::filesystem::path& out_dir);

}  // namespace cmsa
