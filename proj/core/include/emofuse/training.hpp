#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "emofuse/model.hpp"
#include "emofuse/tensor.hpp"

namespace emofuse {

/// One preprocessed dataset sample ready for the network. The audio tensor
/// may be undefined in video-only mode. Augmented variants of a clip share
/// its audio tensor.
struct ClipSample {
  std::string clip_id;
  std::string actor_id;
  std::int64_t label = 0;
  Tensor visual;  // n_frames x 98 x 80
  Tensor audio;   // 1 x 192 x 120, optional
};

struct TrainConfig {
  std::int64_t batch_size = 32;
  double learning_rate = 1e-4;
  double weight_decay = 5e-5;
  bool decoupled_weight_decay = false;
  std::int64_t max_epochs = 10;
  /// Consecutive epochs without a validation-accuracy improvement before
  /// training stops. Ignored when the validation set is empty.
  std::int64_t patience = 1;
  std::uint64_t shuffle_seed = 0;
};

struct EpochReport {
  std::int64_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  double wall_seconds = 0.0;
};

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
  std::vector<std::vector<std::int64_t>> confusion;  // [true][predicted]
};

struct TrainResult {
  FusionModel model;  // snapshot with the best validation accuracy
  std::vector<EpochReport> reports;
};

/// Mini-batch cross-entropy training with Adam. Per epoch: deterministic
/// shuffle keyed by (shuffle_seed, epoch), batches of batch_size with the
/// final partial batch kept, mean batch loss backpropagated, one Adam step
/// per batch, gradients reset afterwards. The snapshot with the best
/// validation accuracy is returned; with an empty validation set the final
/// parameters are returned and early stopping is disabled. The input model
/// is left untouched.
TrainResult train(const FusionModel& model,
                  std::span<const ClipSample> train_set,
                  std::span<const ClipSample> val_set,
                  const TrainConfig& config);

/// Mean cross-entropy loss, accuracy, and the n_classes x n_classes
/// confusion matrix (rows = true label) over a non-empty sample set.
EvalResult evaluate(const FusionModel& model,
                    std::span<const ClipSample> samples);

/// Comma-separated epoch log: epoch,train_loss,train_acc,val_loss,val_acc,seconds.
void write_epoch_log(const std::filesystem::path& path,
                     std::span<const EpochReport> reports);

}  // namespace emofuse
