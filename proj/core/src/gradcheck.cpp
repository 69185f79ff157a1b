#include "cmsa/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "cmsa/errors.hpp"
#include "cmsa/ops.hpp"

namespace cmsa {

GradCheck check_gradients(const std::string& name, const std::function<Tensor()>& loss_fn,
                          const std::vector<Tensor>& leaves, double h, double tolerance,
                          std::optional<std::size_t> samples_per_leaf, std::mt19937_64& rng) {
  for (const Tensor& leaf : leaves) {
    if (!leaf.requires_grad() || !leaf.is_leaf()) {
      throw UsageError("gradcheck: every checked tensor must be a tracked leaf");
    }
  }

  // Analytic pass.
  std::vector<std::vector<double>> analytic;
  {
    Tensor loss = loss_fn();
    auto grads = backward_collect(loss);
    for (const Tensor& leaf : leaves) {
      std::vector<double> g(leaf.size(), 0.0);
      for (const auto& [t, buf] : grads) {
        if (t.node() == leaf.node()) g = buf;
      }
      analytic.push_back(std::move(g));
    }
  }

  GradCheck result;
  result.name = name;
  result.tolerance = tolerance;

  for (std::size_t li = 0; li < leaves.size(); ++li) {
    Tensor leaf = leaves[li];
    std::vector<std::size_t> entries;
    if (samples_per_leaf && *samples_per_leaf < leaf.size()) {
      std::uniform_int_distribution<std::size_t> pick(0, leaf.size() - 1);
      for (std::size_t s = 0; s < *samples_per_leaf; ++s) entries.push_back(pick(rng));
      std::sort(entries.begin(), entries.end());
      entries.erase(std::unique(entries.begin(), entries.end()), entries.end());
    } else {
      entries.resize(leaf.size());
      for (std::size_t i = 0; i < leaf.size(); ++i) entries[i] = i;
    }

    double* data = leaf.data();
    for (std::size_t idx : entries) {
      const double keep = data[idx];
      double plus, minus;
      {
        NoGradGuard no_grad;
        data[idx] = keep + h;
        plus = loss_fn().item();
        data[idx] = keep - h;
        minus = loss_fn().item();
        data[idx] = keep;
      }
      const double fd = (plus - minus) / (2.0 * h);
      const double an = analytic[li][idx];
      const double err = std::abs(an - fd) / std::max({1.0, std::abs(an), std::abs(fd)});
      result.max_rel_err = std::max(result.max_rel_err, err);
      ++result.checked;
    }
  }

  result.pass = result.max_rel_err < tolerance && result.checked > 0;
  return result;
}

GradCheck check_op_gradients(const std::string& name, const std::function<Tensor()>& op,
                             const std::vector<Tensor>& leaves, double h, double tolerance,
                             std::mt19937_64& rng) {
  // Fix the mixing tensor once so repeated evaluations stay comparable.
  Tensor probe = op();
  Tensor mix = random_normal(probe.shape(), 1.0, rng, false);
  auto loss_fn = [op, mix]() { return sum(hadamard(op(), mix)); };
  return check_gradients(name, loss_fn, leaves, h, tolerance, std::nullopt, rng);
}

}  // namespace cmsa
