#pragma once

#include <cstdint>
#include <vector>

#include "emofuse/tensor.hpp"

namespace emofuse {

/// Ordered grayscale frames sharing one size, values in [0, 1].
struct FrameSequence {
  std::vector<Tensor> frames;
  double source_fps = 0.0;  // optional, informational only
};

/// Face bounding box in pixel coordinates, top-left origin. Must lie fully
/// inside its frame.
struct FaceBox {
  std::int64_t frame_index = 0;
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t width = 0;
  std::int64_t height = 0;
};

/// The fixed visual network input: n_frames x 98 x 80, values in [0, 1].
struct VisualSample {
  Tensor stack;
};

/// Source indices for n frames equally distanced over total frames:
/// round(i * (total-1) / (n-1)) with round-half-up, index 0 when n == 1.
/// Shorter sequences repeat indices; the result is monotone.
std::vector<std::int64_t> sample_frame_indices(std::int64_t total,
                                               std::int64_t n);

/// Picks the frames at sample_frame_indices(T, n).
FrameSequence sample_frames(const FrameSequence& seq, std::int64_t n);

/// Crops the box and bilinearly resizes it to out_height x out_width
/// (bit-exact when the box already has the target size). Values are
/// clamped into [0, 1].
Tensor crop_and_resize(const Tensor& frame, const FaceBox& box,
                       std::int64_t out_height = 98,
                       std::int64_t out_width = 80);

/// Stacks same-sized frames into one rank-3 tensor (frames x H x W).
Tensor stack_frames(const FrameSequence& seq);

struct AugmentOptions {
  double max_rotation_deg = 10.0;
  double crop_area = 0.9;  // kept area of the random crop
  double brightness_lo = 0.7;
  double brightness_hi = 1.3;
  double flip_probability = 0.5;
};

/// One concrete draw of the augmentation transform. The same parameters
/// are applied to every frame of a stack so motion cues survive.
struct AugmentParams {
  double rotation_deg = 0.0;
  double crop_side_scale = 1.0;  // side length of the crop window, relative
  double crop_dx = 0.5;          // window position inside the margin, [0, 1]
  double crop_dy = 0.5;
  double brightness = 1.0;
  bool horizontal_flip = false;
};

/// Draws rotation in [-max_rotation, +max_rotation], a crop window of
/// crop_area relative area at a random position, brightness in
/// [brightness_lo, brightness_hi] and a flip with flip_probability, all
/// from a generator seeded by seed alone.
AugmentParams draw_augment_params(std::uint64_t seed,
                                  const AugmentOptions& options = {});

/// Applies a fixed transform to every frame: rotation (bilinear, border
/// replication), crop rescaled back to full size, brightness with clamp to
/// [0, 1], optional horizontal flip. Geometry is composed into a single
/// resampling pass per frame.
VisualSample apply_augment(const VisualSample& sample,
                           const AugmentParams& params);

/// draw_augment_params + apply_augment.
VisualSample augment(const VisualSample& sample, std::uint64_t seed,
                     const AugmentOptions& options = {});

/// Element 0 is the untouched original; elements 1..copies are
/// augment(sample, base_seed + i). The default yields 31 samples.
std::vector<VisualSample> expand_dataset(const VisualSample& sample,
                                         std::uint64_t base_seed,
                                         std::int64_t copies = 30,
                                         const AugmentOptions& options = {});

}  // namespace emofuse
