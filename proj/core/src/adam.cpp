#include "cmsa/adam.hpp"

#include <cmath>

#include "cmsa/errors.hpp"

namespace cmsa {

AdamState::AdamState(std::vector<Tensor> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  if (config_.max_steps == 0) throw UsageError("adam: max_steps must be positive");
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Tensor& p : params_) {
    if (!p.requires_grad()) throw UsageError("adam: every parameter must be tracked");
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

double AdamState::lr() const {
  const double frac = 1.0 - static_cast<double>(t_) / static_cast<double>(config_.max_steps);
  if (frac <= 0.0) return 0.0;
  return config_.base_lr * std::pow(frac, config_.poly_power);
}

void AdamState::step() {
  const double rate = lr();
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const std::size_t t1 = t_ + 1;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(t1));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(t1));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    const std::vector<double>& g = p.grad();
    double* theta = p.data();
    std::vector<double>& m = m_[i];
    std::vector<double>& v = v_[i];
    for (std::size_t j = 0; j < g.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      const double mhat = m[j] / corr1;
      const double vhat = v[j] / corr2;
      theta[j] -= rate * (mhat / (std::sqrt(vhat) + config_.eps));
      theta[j] -= rate * config_.weight_decay * theta[j];
    }
  }
  ++t_;
}

}  // namespace cmsa
