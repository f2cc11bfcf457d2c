#include "emofuse/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "emofuse/adam.hpp"
#include "emofuse/autodiff.hpp"
#include "emofuse/error.hpp"
#include "emofuse/ops.hpp"

namespace emofuse {

namespace {

using std::int64_t;

int64_t argmax_lowest(std::span<const double> values) {
  int64_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[std::size_t(best)]) best = int64_t(i);
  }
  return best;
}

void check_labels(std::span<const ClipSample> samples, int64_t n_classes) {
  for (const ClipSample& s : samples) {
    if (s.label < 0 || s.label >= n_classes) {
      throw ConfigError("sample '" + s.clip_id + "' has label " +
                        std::to_string(s.label) + " outside [0, " +
                        std::to_string(n_classes) + ")");
    }
  }
}

}  // namespace

TrainResult train(const FusionModel& model,
                  std::span<const ClipSample> train_set,
                  std::span<const ClipSample> val_set,
                  const TrainConfig& config) {
  if (train_set.empty()) throw ConfigError("training set is empty");
  if (config.batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (config.learning_rate < 0.0) {
    throw ConfigError("learning rate must be non-negative");
  }
  check_labels(train_set, model.config.n_classes);
  check_labels(val_set, model.config.n_classes);

  FusionModel working = model.clone();
  AdamConfig adam_cfg;
  adam_cfg.learning_rate = config.learning_rate;
  adam_cfg.weight_decay = config.weight_decay;
  adam_cfg.decoupled_weight_decay = config.decoupled_weight_decay;
  AdamState adam(working.params, adam_cfg);

  for (Tensor& p : working.params) p.zero_grad();

  TrainResult result;
  FusionModel best = working.clone();
  double best_val_accuracy = -1.0;
  int64_t epochs_without_improvement = 0;
  const bool has_val = !val_set.empty();

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t(0));

  for (int64_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();

    std::mt19937_64 rng(config.shuffle_seed * 0x9e3779b97f4a7c15ULL +
                        std::uint64_t(epoch));
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    int64_t correct = 0;

    for (std::size_t start = 0; start < order.size();
         start += std::size_t(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + std::size_t(config.batch_size));
      const double inv_batch = 1.0 / double(end - start);
      double batch_loss = 0.0;

      for (std::size_t i = start; i < end; ++i) {
        const ClipSample& sample = train_set[order[i]];
        Tape tape;
        const Tensor scores =
            forward_scores(working, sample.visual,
                           sample.audio.defined() ? &sample.audio : nullptr,
                           &tape);
        const Tensor probs = softmax(scores, &tape);
        const Tensor loss = cross_entropy(probs, sample.label, &tape);
        // Scaling each sample loss by 1/B makes the accumulated parameter
        // gradients equal the gradient of the batch mean.
        const Tensor scaled = scale(loss, inv_batch, &tape);
        tape.backward(scaled);
        batch_loss += loss.at(0) * inv_batch;
        if (argmax_lowest(probs.data()) == sample.label) ++correct;
      }

      if (!std::isfinite(batch_loss)) {
        throw NumericError("non-finite loss at epoch " +
                           std::to_string(epoch) + ", batch starting at " +
                           std::to_string(start));
      }
      adam_step(working.params, adam);
      for (Tensor& p : working.params) p.zero_grad();
      loss_sum += batch_loss * double(end - start);
    }

    EpochReport report;
    report.epoch = epoch;
    report.train_loss = loss_sum / double(train_set.size());
    report.train_accuracy = double(correct) / double(train_set.size());
    if (has_val) {
      const EvalResult val = evaluate(working, val_set);
      report.val_loss = val.loss;
      report.val_accuracy = val.accuracy;
    }
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      epoch_start)
            .count();
    result.reports.push_back(report);

    if (has_val) {
      if (report.val_accuracy > best_val_accuracy) {
        best_val_accuracy = report.val_accuracy;
        best = working.clone();
        epochs_without_improvement = 0;
      } else {
        ++epochs_without_improvement;
        if (epochs_without_improvement >= config.patience) break;
      }
    }
  }

  result.model = has_val ? std::move(best) : std::move(working);
  return result;
}

EvalResult evaluate(const FusionModel& model,
                    std::span<const ClipSample> samples) {
  if (samples.empty()) throw ConfigError("evaluate on an empty sample set");
  check_labels(samples, model.config.n_classes);

  const int64_t n_classes = model.config.n_classes;
  EvalResult result;
  result.confusion.assign(std::size_t(n_classes),
                          std::vector<int64_t>(std::size_t(n_classes), 0));
  double loss_sum = 0.0;
  int64_t correct = 0;
  for (const ClipSample& sample : samples) {
    const Prediction pred =
        predict(model, sample.visual,
                sample.audio.defined() ? &sample.audio : nullptr);
    const Tensor loss = cross_entropy(pred.probabilities, sample.label);
    loss_sum += loss.at(0);
    if (pred.label == sample.label) ++correct;
    result.confusion[std::size_t(sample.label)][std::size_t(pred.label)] += 1;
  }
  result.loss = loss_sum / double(samples.size());
  result.accuracy = double(correct) / double(samples.size());
  return result;
}

void write_epoch_log(const std::filesystem::path& path,
                     std::span<const EpochReport> reports) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.precision(17);
  for (const EpochReport& r : reports) {
    out << r.epoch << "," << r.train_loss << "," << r.train_accuracy << ","
        << r.val_loss << "," << r.val_accuracy << "," << r.wall_seconds
        << "\n";
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace emofuse
