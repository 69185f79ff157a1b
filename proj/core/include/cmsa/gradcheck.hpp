#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cmsa/tensor.hpp"

namespace cmsa {

/// Outcome of one analytic-vs-central-difference comparison.
struct GradCheck {
  std::string name;
  double max_rel_err = 0.0;
  std::size_t checked = 0;
  bool pass = false;
  double tolerance = 0.0;
};

/// Compares reverse-mode gradients of `loss_fn` against central finite
/// differences. `loss_fn` must be a pure function of the leaf values: it is
/// re-run with perturbed entries, so it has to rebuild its graph each call.
/// When `samples_per_leaf` is set, only that many entries per leaf are
/// probed (chosen with `rng`); otherwise every entry is.
///
/// Error metric per entry: |analytic - fd| / max(1, |analytic|, |fd|).
GradCheck check_gradients(const std::string& name, const std::function<Tensor()>& loss_fn,
                          const std::vector<Tensor>& leaves, double h, double tolerance,
                          std::optional<std::size_t> samples_per_leaf, std::mt19937_64& rng);

/// Convenience wrapper: builds the scalar loss sum(f() ⊙ R) with a fixed
/// random mixing tensor R so every output entry influences the check.
GradCheck check_op_gradients(const std::string& name, const std::function<Tensor()>& op,
                             const std::vector<Tensor>& leaves, double h, double tolerance,
                             std::mt19937_64& rng);

struct GradCheckSuite {
  std::vector<GradCheck> checks;
  bool all_pass = true;
};

struct RunConfig;  // config.hpp

/// The standard battery: every primitive op against central differences at
/// 1e-6, then the full network loss on one generated sample against
/// per-parameter-group probes at 1e-4. Deterministic in (config, seed).
GradCheckSuite run_gradcheck_suite(const RunConfig& config, std::uint64_t seed);

}  // namespace cmsa
