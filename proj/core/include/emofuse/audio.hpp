#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace emofuse {

/// Mono PCM audio in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate_hz = 0;

  double duration_seconds() const {
    return sample_rate_hz > 0
               ? double(samples.size()) / double(sample_rate_hz)
               : 0.0;
  }
};

/// Reads a RIFF/WAVE file with 16-bit PCM samples, mono or stereo.
/// Stereo channels are averaged; integer samples are scaled by 1/32768.
/// Unsupported codecs or bit depths raise FormatError naming the offending
/// chunk; a truncated file raises IoError.
AudioClip load_wav(const std::filesystem::path& path);

/// Writes a mono 16-bit PCM WAV. Samples are clamped to [-1, 1) and
/// quantized with round-to-nearest.
void write_wav(const std::filesystem::path& path, const AudioClip& clip);

/// Linear resampling onto a new rate; returns the clip unchanged when the
/// rate already matches.
AudioClip resample_linear(const AudioClip& clip, int target_rate_hz);

}  // namespace emofuse
