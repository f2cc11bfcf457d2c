#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "emofuse/autodiff.hpp"
#include "emofuse/tensor.hpp"

namespace emofuse {

enum class FusionMode { AudioVideo, VideoOnly };

std::string fusion_mode_name(FusionMode mode);
FusionMode fusion_mode_from_name(const std::string& name);

/// One convolution stage: stride-1 convolution with padding kernel/2,
/// followed by ReLU and 2x2 max pooling.
struct ConvStage {
  std::int64_t out_channels = 0;
  std::int64_t kernel = 0;
};

struct ModelConfig {
  FusionMode mode = FusionMode::AudioVideo;
  std::int64_t n_frames = 20;
  std::int64_t visual_height = 98;
  std::int64_t visual_width = 80;
  std::int64_t audio_bins = 192;
  std::int64_t audio_frames = 120;
  std::int64_t visual_feature_len = 256;
  std::int64_t audio_feature_len = 64;
  std::int64_t n_classes = 6;
  std::int64_t classifier_hidden = 128;
  std::vector<ConvStage> visual_convs = {{32, 5}, {64, 5}, {96, 3}};
  std::vector<ConvStage> audio_convs = {{16, 5}, {32, 3}};
  std::uint64_t init_seed = 0;

  /// Throws ConfigError if inconsistent. The visual feature length must be
  /// exactly four times the audio one; kernels must be odd.
  void validate() const;

  std::int64_t classifier_input_len() const {
    return mode == FusionMode::AudioVideo
               ? visual_feature_len + audio_feature_len
               : visual_feature_len;
  }
};

/// The complete parameter set of the fusion network: visual branch, audio
/// branch (absent in video-only mode) and the two-layer classifier. A
/// trained model is an immutable value; only the optimizer mutates its
/// parameters, on a single thread.
struct FusionModel {
  ModelConfig config;
  std::vector<std::string> param_names;  // checkpoint order
  std::vector<Tensor> params;            // parallel to param_names

  Tensor& param(const std::string& name);
  const Tensor& param(const std::string& name) const;
  bool has_param(const std::string& name) const;
  std::size_t parameter_count() const;

  /// Deep copy with fresh storage (used for best-epoch snapshots).
  FusionModel clone() const;
};

/// He-normal weights (std = sqrt(2 / fan_in)) and zero biases, drawn from a
/// generator seeded by config.init_seed; deterministic for a fixed seed.
FusionModel init_model(const ModelConfig& config);

/// init_model with the audio branch removed and the classifier reading the
/// 256-long visual feature vector alone.
FusionModel visual_only_variant(ModelConfig config);

/// Visual branch: stack (n_frames x H x W) -> feature vector (256).
Tensor forward_visual(const FusionModel& model, const Tensor& stack,
                      Tape* tape = nullptr);

/// Audio branch: spectrogram (1 x 192 x 120) -> feature vector (64).
Tensor forward_audio(const FusionModel& model, const Tensor& spec,
                     Tape* tape = nullptr);

/// Both branches, concatenated visual-then-audio, through the classifier to
/// raw class scores (length n_classes). Audio+video mode only.
Tensor forward_fused(const FusionModel& model, const Tensor& stack,
                     const Tensor& spec, Tape* tape = nullptr);

/// Mode-dispatching forward to raw scores; spec may be null in video-only
/// mode and is required otherwise.
Tensor forward_scores(const FusionModel& model, const Tensor& stack,
                      const Tensor* spec, Tape* tape = nullptr);

struct Prediction {
  Tensor probabilities;  // length n_classes, sums to 1
  std::int64_t label = 0;  // argmax, lowest index on exact ties
};

Prediction predict(const FusionModel& model, const Tensor& stack,
                   const Tensor* spec = nullptr);

/// Number of scalar parameters in every tensor whose name starts with the
/// given prefix (e.g. "visual." or "audio.").
std::size_t branch_parameter_count(const FusionModel& model,
                                   const std::string& prefix);

// Checkpoint container: a text header of config key=value lines and one
// "tensor <name> <shape> <count>" line per parameter, a blank line, then
// the little-endian 64-bit float payloads in header order. Round-trips are
// byte-exact.
void save_checkpoint(const FusionModel& model,
                     const std::filesystem::path& path);
FusionModel load_checkpoint(const std::filesystem::path& path);

}  // namespace emofuse
