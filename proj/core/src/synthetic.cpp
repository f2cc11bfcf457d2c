#include "emofuse/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "emofuse/audio.hpp"
#include "emofuse/error.hpp"
#include "emofuse/image.hpp"

namespace emofuse {

namespace {

using std::int64_t;

double next_unit(std::mt19937_64& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

// Bright bar through the frame center at the class angle, drifting slowly
// sideways across the stack so there is motion to look at.
Tensor render_frame(int64_t h, int64_t w, double angle_deg, double drift_px,
                    double base_intensity, double noise_level,
                    std::mt19937_64& rng) {
  Tensor frame({h, w});
  auto px = frame.data();
  const double theta = angle_deg * std::numbers::pi / 180.0;
  const double nx = -std::sin(theta);
  const double ny = std::cos(theta);
  const double cy = double(h - 1) / 2.0;
  const double cx = double(w - 1) / 2.0 + drift_px;
  const double half_width = 4.0;
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      const double d =
          std::abs(nx * (double(x) - cx) + ny * (double(y) - cy));
      const double bar = std::max(0.0, 1.0 - d / half_width);
      const double noise = noise_level * (2.0 * next_unit(rng) - 1.0);
      px[std::size_t(y * w + x)] =
          std::clamp(base_intensity + 0.8 * bar + noise, 0.0, 1.0);
    }
  }
  return frame;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (n_actors < 1 || clips_per_class < 1) {
    throw ConfigError("synthetic spec needs at least one actor and one clip "
                      "per class");
  }
  if (frames_per_clip < 1) throw ConfigError("frames_per_clip must be >= 1");
  if (frame_height < 2 || frame_width < 2) {
    throw ConfigError("synthetic frames must be at least 2x2");
  }
  if (clip_seconds <= 0.0 || sample_rate_hz <= 0) {
    throw ConfigError("synthetic clips need positive duration and rate");
  }
  if (noise_level < 0.0) throw ConfigError("noise level must be >= 0");
}

DatasetManifest generate_synthetic_dataset(const SyntheticSpec& spec,
                                           const std::filesystem::path& out_dir) {
  spec.validate();
  std::filesystem::create_directories(out_dir / "frames");
  std::filesystem::create_directories(out_dir / "audio");

  DatasetManifest manifest;
  manifest.base_dir = out_dir;

  for (int64_t actor = 0; actor < spec.n_actors; ++actor) {
    std::ostringstream actor_name;
    actor_name << "actor";
    actor_name.width(2);
    actor_name.fill('0');
    actor_name << actor;
    // Mild per-actor nuisance so classes, not identities, carry the signal.
    const double actor_tint = 0.05 + 0.10 * double(actor % 5) / 4.0;
    const double actor_gain = 0.45 + 0.02 * double(actor % 4);

    for (int64_t cls = 0; cls < 6; ++cls) {
      for (int64_t rep = 0; rep < spec.clips_per_class; ++rep) {
        std::ostringstream clip_name;
        clip_name << actor_name.str() << "_" << emotion_name(cls) << "_";
        clip_name.width(2);
        clip_name.fill('0');
        clip_name << rep;
        const std::string clip_id = clip_name.str();

        std::mt19937_64 rng(spec.seed * 0x9e3779b97f4a7c15ULL +
                            std::uint64_t(actor * 6011 + cls * 127 + rep));

        const std::filesystem::path frame_dir = out_dir / "frames" / clip_id;
        std::filesystem::create_directories(frame_dir);
        const double drift_phase = 2.0 * std::numbers::pi * next_unit(rng);
        for (int64_t f = 0; f < spec.frames_per_clip; ++f) {
          const double drift =
              3.0 * std::sin(drift_phase + 2.0 * std::numbers::pi * double(f) /
                                               double(spec.frames_per_clip));
          const Tensor frame = render_frame(
              spec.frame_height, spec.frame_width,
              spec.bar_angle_deg[std::size_t(cls)], drift, actor_tint,
              spec.noise_level, rng);
          std::ostringstream frame_name;
          frame_name << "frame_";
          frame_name.width(3);
          frame_name.fill('0');
          frame_name << f << ".pgm";
          save_pgm(frame, frame_dir / frame_name.str());
        }

        AudioClip clip;
        clip.sample_rate_hz = spec.sample_rate_hz;
        const auto n_samples =
            std::size_t(spec.clip_seconds * double(spec.sample_rate_hz));
        clip.samples.resize(n_samples);
        const double freq = spec.tone_freq_hz[std::size_t(cls)];
        const double phase = 2.0 * std::numbers::pi * next_unit(rng);
        for (std::size_t i = 0; i < n_samples; ++i) {
          const double t = double(i) / double(spec.sample_rate_hz);
          const double noise = spec.noise_level * (2.0 * next_unit(rng) - 1.0);
          clip.samples[i] = std::clamp(
              actor_gain * std::sin(2.0 * std::numbers::pi * freq * t + phase) +
                  noise,
              -1.0, 1.0);
        }
        const std::string wav_name = clip_id + ".wav";
        write_wav(out_dir / "audio" / wav_name, clip);

        ClipRecord record;
        record.clip_id = clip_id;
        record.actor_id = actor_name.str();
        record.label = cls;
        record.frames_path = "frames/" + clip_id;
        record.audio_path = "audio/" + wav_name;
        manifest.records.push_back(std::move(record));
      }
    }
  }

  save_manifest(manifest, out_dir / "manifest.tsv");
  return manifest;
}

}  // namespace emofuse
