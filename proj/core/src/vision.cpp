#include "emofuse/vision.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "emofuse/error.hpp"
#include "emofuse/image.hpp"

namespace emofuse {

namespace {

using std::int64_t;

// Uniform draw in [0, 1) built directly from engine output; stable across
// standard-library implementations.
double next_unit(std::mt19937_64& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

void check_frame(const Tensor& frame) {
  if (frame.rank() != 2) {
    throw ShapeError("frames must be rank-2 grayscale images, got " +
                     frame.shape_string());
  }
}

}  // namespace

std::vector<int64_t> sample_frame_indices(int64_t total, int64_t n) {
  if (n < 1) throw ConfigError("sample_frame_indices needs n >= 1");
  if (total < 1) throw ConfigError("sample_frame_indices needs total >= 1");
  std::vector<int64_t> indices(static_cast<std::size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    indices[std::size_t(i)] =
        n == 1 ? 0
               : int64_t(std::floor(double(i) * double(total - 1) /
                                        double(n - 1) +
                                    0.5));
  }
  return indices;
}

FrameSequence sample_frames(const FrameSequence& seq, int64_t n) {
  if (seq.frames.empty()) {
    throw ConfigError("sample_frames on an empty sequence");
  }
  FrameSequence out;
  out.source_fps = seq.source_fps;
  out.frames.reserve(std::size_t(n));
  for (int64_t idx : sample_frame_indices(int64_t(seq.frames.size()), n)) {
    out.frames.push_back(seq.frames[std::size_t(idx)]);
  }
  return out;
}

Tensor crop_and_resize(const Tensor& frame, const FaceBox& box,
                       int64_t out_height, int64_t out_width) {
  check_frame(frame);
  const int64_t h = frame.extent(0), w = frame.extent(1);
  if (box.width < 1 || box.height < 1 || box.x < 0 || box.y < 0 ||
      box.x + box.width > w || box.y + box.height > h) {
    throw GeometryError("face box " + std::to_string(box.x) + "," +
                        std::to_string(box.y) + " " +
                        std::to_string(box.width) + "x" +
                        std::to_string(box.height) +
                        " outside frame " + frame.shape_string());
  }

  Tensor out({out_height, out_width});
  auto dst = out.data();
  for (int64_t oy = 0; oy < out_height; ++oy) {
    const double sy =
        out_height == 1
            ? double(box.y)
            : double(box.y) + double(oy) * double(box.height - 1) /
                                  double(out_height - 1);
    for (int64_t ox = 0; ox < out_width; ++ox) {
      const double sx =
          out_width == 1
              ? double(box.x)
              : double(box.x) + double(ox) * double(box.width - 1) /
                                    double(out_width - 1);
      dst[std::size_t(oy * out_width + ox)] =
          std::clamp(sample_bilinear(frame, sy, sx), 0.0, 1.0);
    }
  }
  return out;
}

Tensor stack_frames(const FrameSequence& seq) {
  if (seq.frames.empty()) throw ConfigError("stack_frames on empty sequence");
  check_frame(seq.frames.front());
  const int64_t h = seq.frames.front().extent(0);
  const int64_t w = seq.frames.front().extent(1);
  const auto n = int64_t(seq.frames.size());
  Tensor stack({n, h, w});
  auto dst = stack.data();
  for (int64_t i = 0; i < n; ++i) {
    const Tensor& f = seq.frames[std::size_t(i)];
    if (f.extent(0) != h || f.extent(1) != w) {
      throw ShapeError("stack_frames requires uniform frame sizes");
    }
    const auto src = f.data();
    std::copy(src.begin(), src.end(), dst.begin() + std::size_t(i * h * w));
  }
  return stack;
}

AugmentParams draw_augment_params(std::uint64_t seed,
                                  const AugmentOptions& options) {
  std::mt19937_64 rng(seed);
  AugmentParams p;
  p.rotation_deg =
      (2.0 * next_unit(rng) - 1.0) * options.max_rotation_deg;
  p.crop_side_scale = std::sqrt(options.crop_area);
  p.crop_dx = next_unit(rng);
  p.crop_dy = next_unit(rng);
  p.brightness = options.brightness_lo +
                 next_unit(rng) * (options.brightness_hi - options.brightness_lo);
  p.horizontal_flip = next_unit(rng) < options.flip_probability;
  return p;
}

VisualSample apply_augment(const VisualSample& sample,
                           const AugmentParams& params) {
  const Tensor& stack = sample.stack;
  if (stack.rank() != 3) {
    throw ShapeError("visual sample stack must be rank-3, got " +
                     stack.shape_string());
  }
  const int64_t n = stack.extent(0), h = stack.extent(1), w = stack.extent(2);

  const double crop_h = params.crop_side_scale * double(h);
  const double crop_w = params.crop_side_scale * double(w);
  const double oy = params.crop_dy * (double(h) - crop_h);
  const double ox = params.crop_dx * (double(w) - crop_w);
  const double theta = params.rotation_deg * std::numbers::pi / 180.0;
  const double cos_t = std::cos(theta), sin_t = std::sin(theta);
  const double cy = double(h - 1) / 2.0, cx = double(w - 1) / 2.0;

  Tensor out({n, h, w});
  auto dst = out.data();
  const auto src = stack.data();
  for (int64_t f = 0; f < n; ++f) {
    for (int64_t y = 0; y < h; ++y) {
      for (int64_t x = 0; x < w; ++x) {
        // Walk the output pixel back through flip, crop zoom, rotation.
        double px = params.horizontal_flip ? double(w - 1 - x) : double(x);
        double py = double(y);
        py = oy + (h == 1 ? 0.0 : py * (crop_h - 1.0) / double(h - 1));
        px = ox + (w == 1 ? 0.0 : px * (crop_w - 1.0) / double(w - 1));
        const double ry = cy + (py - cy) * cos_t - (px - cx) * sin_t;
        const double rx = cx + (py - cy) * sin_t + (px - cx) * cos_t;
        double v = 0.0;
        {
          // sample frame f of the stack, border replicated
          const double ycl = std::clamp(ry, 0.0, double(h - 1));
          const double xcl = std::clamp(rx, 0.0, double(w - 1));
          const auto y0 = int64_t(ycl);
          const auto x0 = int64_t(xcl);
          const int64_t y1 = std::min(y0 + 1, h - 1);
          const int64_t x1 = std::min(x0 + 1, w - 1);
          const double fy = ycl - double(y0);
          const double fx = xcl - double(x0);
          const std::size_t base = std::size_t(f * h * w);
          const double top = src[base + std::size_t(y0 * w + x0)] * (1.0 - fx) +
                             src[base + std::size_t(y0 * w + x1)] * fx;
          const double bot = src[base + std::size_t(y1 * w + x0)] * (1.0 - fx) +
                             src[base + std::size_t(y1 * w + x1)] * fx;
          v = top * (1.0 - fy) + bot * fy;
        }
        dst[std::size_t((f * h + y) * w + x)] =
            std::clamp(v * params.brightness, 0.0, 1.0);
      }
    }
  }
  return VisualSample{out};
}

VisualSample augment(const VisualSample& sample, std::uint64_t seed,
                     const AugmentOptions& options) {
  return apply_augment(sample, draw_augment_params(seed, options));
}

std::vector<VisualSample> expand_dataset(const VisualSample& sample,
                                         std::uint64_t base_seed,
                                         int64_t copies,
                                         const AugmentOptions& options) {
  std::vector<VisualSample> out;
  out.reserve(std::size_t(copies) + 1);
  out.push_back(sample);
  for (int64_t i = 1; i <= copies; ++i) {
    out.push_back(augment(sample, base_seed + std::uint64_t(i), options));
  }
  return out;
}

}  // namespace emofuse
