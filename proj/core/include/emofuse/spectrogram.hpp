#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "emofuse/audio.hpp"
#include "emofuse/tensor.hpp"

namespace emofuse {

enum class WindowKind { Hann, Rectangular };

WindowKind window_kind_from_name(const std::string& name);
std::string window_kind_name(WindowKind kind);

/// One-sided short-time spectrum: rows are frequency bins (window/2 + 1),
/// columns are frames.
struct ComplexGrid {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<std::complex<double>> values;  // row-major
  std::int64_t window_length = 0;
  std::int64_t hop_length = 0;
  int sample_rate_hz = 0;

  std::complex<double>& at(std::int64_t r, std::int64_t c) {
    return values[std::size_t(r * cols + c)];
  }
  std::complex<double> at(std::int64_t r, std::int64_t c) const {
    return values[std::size_t(r * cols + c)];
  }
};

/// Time-frequency magnitude grid: frequency bins by time frames, all values
/// non-negative. The bin height is fixed by the window length alone, never
/// by the clip duration.
struct Spectrogram {
  Tensor values;  // rank-2, frequency_bins x time_frames
  std::int64_t window_length = 0;
  std::int64_t hop_length = 0;
  int sample_rate_hz = 0;

  std::int64_t bins() const { return values.defined() ? values.extent(0) : 0; }
  std::int64_t frames() const { return values.defined() ? values.extent(1) : 0; }
};

/// Windowed DFT at successive hops. The window length must be even and the
/// hop must satisfy 0 < hop <= window. The clip tail is zero-padded so the
/// final partial frame is complete; column t holds the one-sided spectrum
/// of the frame starting at t * hop.
ComplexGrid stft(const AudioClip& clip, std::int64_t window_length,
                 std::int64_t hop_length, WindowKind window = WindowKind::Hann);

/// log(1 + |z|) elementwise.
Spectrogram to_log_magnitude(const ComplexGrid& grid);

/// |z| elementwise (raw-magnitude mode).
Spectrogram to_magnitude(const ComplexGrid& grid);

/// Per-row linear interpolation along time onto target_frames uniformly
/// spaced points spanning [0, frames-1]. Identity when the frame counts
/// already match.
Spectrogram resize_width(const Spectrogram& spec, std::int64_t target_frames);

struct SpectrogramOptions {
  int target_rate_hz = 16000;
  std::int64_t window_length = 384;
  std::int64_t hop_length = 256;
  WindowKind window = WindowKind::Hann;
  bool log_compress = true;
  /// Rows kept from the one-sided spectrum; with a 384-sample window the
  /// 193rd (Nyquist) row is dropped to land exactly on 192.
  std::int64_t out_bins = 192;
  std::int64_t out_frames = 120;
};

/// Full audio front end: resample to the target rate, stft, magnitude
/// compression, row trim, width resize, then per-spectrogram min-max
/// normalization into [0, 1] (a constant spectrogram maps to all zeros).
Spectrogram compute_spectrogram(const AudioClip& clip,
                                const SpectrogramOptions& options = {});

/// compute_spectrogram reshaped to the rank-3 network input
/// (1 x out_bins x out_frames; 1 x 192 x 120 with default options).
Tensor spectrogram_pipeline(const AudioClip& clip,
                            const SpectrogramOptions& options = {});

/// 8-bit binary PGM (P5) with min-max quantization; frequency row 0 is
/// written at the bottom of the image. A constant spectrogram produces an
/// all-zero image.
void export_pgm(const Spectrogram& spec, const std::filesystem::path& path);

}  // namespace emofuse
