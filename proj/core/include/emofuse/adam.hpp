#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "emofuse/tensor.hpp"

namespace emofuse {

struct AdamConfig {
  double learning_rate = 1e-4;
  double weight_decay = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Classic L2 decay adds weight_decay * param to the gradient before the
  /// moment updates. When true, decay is instead applied directly to the
  /// parameters after the Adam step (decoupled form).
  bool decoupled_weight_decay = false;
};

/// First/second moment estimates for a fixed set of parameter tensors.
/// The moment buffers are laid out one per tracked tensor and must keep
/// matching those tensors' element counts; step_count advances by one on
/// every update. Confined to the single training thread.
class AdamState {
 public:
  AdamState(std::span<const Tensor> params, AdamConfig config);

  const AdamConfig& config() const { return config_; }
  std::int64_t step_count() const { return step_count_; }
  std::size_t tracked_tensors() const { return moments1_.size(); }
  std::span<const double> first_moment(std::size_t param_index) const;
  std::span<const double> second_moment(std::size_t param_index) const;

  friend void adam_step(std::span<Tensor> params, AdamState& state);

 private:
  AdamConfig config_;
  std::int64_t step_count_ = 0;
  std::vector<std::vector<double>> moments1_;
  std::vector<std::vector<double>> moments2_;
};

/// One bias-corrected Adam update over every tracked parameter. Gradients
/// must be populated; they are left untouched for the caller to reset.
void adam_step(std::span<Tensor> params, AdamState& state);

}  // namespace emofuse
