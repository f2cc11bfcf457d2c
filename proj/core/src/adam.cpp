#include "emofuse/adam.hpp"

#include <cmath>
#include <string>

#include "emofuse/error.hpp"

namespace emofuse {

AdamState::AdamState(std::span<const Tensor> params, AdamConfig config)
    : config_(config) {
  if (config_.learning_rate < 0.0) {
    throw ConfigError("Adam learning rate must be non-negative");
  }
  if (config_.weight_decay < 0.0) {
    throw ConfigError("Adam weight decay must be non-negative");
  }
  if (config_.beta1 <= 0.0 || config_.beta1 >= 1.0 || config_.beta2 <= 0.0 ||
      config_.beta2 >= 1.0) {
    throw ConfigError("Adam betas must lie in (0, 1)");
  }
  moments1_.reserve(params.size());
  moments2_.reserve(params.size());
  for (const Tensor& p : params) {
    moments1_.emplace_back(p.size(), 0.0);
    moments2_.emplace_back(p.size(), 0.0);
  }
}

std::span<const double> AdamState::first_moment(std::size_t param_index) const {
  return moments1_.at(param_index);
}

std::span<const double> AdamState::second_moment(std::size_t param_index) const {
  return moments2_.at(param_index);
}

void adam_step(std::span<Tensor> params, AdamState& state) {
  if (params.size() != state.moments1_.size()) {
    throw StateError("Adam state tracks " +
                     std::to_string(state.moments1_.size()) +
                     " tensors but " + std::to_string(params.size()) +
                     " were passed");
  }
  const AdamConfig& cfg = state.config_;
  state.step_count_ += 1;
  const double bias1 = 1.0 - std::pow(cfg.beta1, double(state.step_count_));
  const double bias2 = 1.0 - std::pow(cfg.beta2, double(state.step_count_));

  for (std::size_t t = 0; t < params.size(); ++t) {
    Tensor& param = params[t];
    std::vector<double>& m = state.moments1_[t];
    std::vector<double>& v = state.moments2_[t];
    if (m.size() != param.size()) {
      throw StateError("Adam moment shape mismatch on parameter " +
                       std::to_string(t) + ": state has " +
                       std::to_string(m.size()) + " entries, tensor has " +
                       std::to_string(param.size()));
    }
    if (!param.has_grad()) {
      throw StateError("Adam update requires populated gradients (parameter " +
                       std::to_string(t) + " has none)");
    }
    auto p = param.data();
    const auto g = param.grad();
    for (std::size_t i = 0; i < p.size(); ++i) {
      double grad = g[i];
      if (!cfg.decoupled_weight_decay) grad += cfg.weight_decay * p[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad * grad;
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      p[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
      if (cfg.decoupled_weight_decay) {
        p[i] -= cfg.learning_rate * cfg.weight_decay * p[i];
      }
    }
  }
}

}  // namespace emofuse
