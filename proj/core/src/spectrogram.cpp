#include "emofuse/spectrogram.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>

#include "emofuse/error.hpp"

namespace emofuse {

namespace {

using std::int64_t;
using cdouble = std::complex<double>;

int64_t smallest_prime_factor(int64_t n) {
  for (int64_t p = 2; p * p <= n; ++p) {
    if (n % p == 0) return p;
  }
  return n;
}

// Cooley-Tukey FFT for any smooth length, recursing on the smallest prime
// factor; prime lengths fall back to the direct transform.
std::vector<cdouble> fft(const std::vector<cdouble>& x) {
  const int64_t n = int64_t(x.size());
  if (n == 1) return x;

  // Shared twiddle table: tw[t] = exp(-2*pi*i*t/n).
  std::vector<cdouble> tw(static_cast<std::size_t>(n));
  for (int64_t t = 0; t < n; ++t) {
    tw[std::size_t(t)] =
        std::polar(1.0, -2.0 * std::numbers::pi * double(t) / double(n));
  }

  const int64_t p = smallest_prime_factor(n);
  if (p == n) {
    std::vector<cdouble> out(static_cast<std::size_t>(n));
    for (int64_t k = 0; k < n; ++k) {
      cdouble acc = 0.0;
      for (int64_t j = 0; j < n; ++j) {
        acc += x[std::size_t(j)] * tw[std::size_t((j * k) % n)];
      }
      out[std::size_t(k)] = acc;
    }
    return out;
  }

  const int64_t m = n / p;
  std::vector<std::vector<cdouble>> sub(static_cast<std::size_t>(p));
  for (int64_t r = 0; r < p; ++r) {
    sub[std::size_t(r)].resize(std::size_t(m));
    for (int64_t j = 0; j < m; ++j) {
      sub[std::size_t(r)][std::size_t(j)] = x[std::size_t(p * j + r)];
    }
    sub[std::size_t(r)] = fft(sub[std::size_t(r)]);
  }
  std::vector<cdouble> out(static_cast<std::size_t>(n));
  for (int64_t k = 0; k < n; ++k) {
    cdouble acc = 0.0;
    for (int64_t r = 0; r < p; ++r) {
      acc += tw[std::size_t((r * k) % n)] * sub[std::size_t(r)][std::size_t(k % m)];
    }
    out[std::size_t(k)] = acc;
  }
  return out;
}

std::vector<double> make_window(WindowKind kind, int64_t length) {
  std::vector<double> w(std::size_t(length), 1.0);
  if (kind == WindowKind::Hann) {
    for (int64_t i = 0; i < length; ++i) {
      w[std::size_t(i)] =
          0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * double(i) /
                               double(length));
    }
  }
  return w;
}

Spectrogram magnitude_grid(const ComplexGrid& grid, bool log_compress) {
  if (grid.rows <= 0 || grid.cols <= 0) {
    throw ShapeError("magnitude of an empty complex grid");
  }
  Tensor values({grid.rows, grid.cols});
  auto out = values.data();
  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    const double mag = std::abs(grid.values[i]);
    out[i] = log_compress ? std::log1p(mag) : mag;
  }
  Spectrogram spec;
  spec.values = values;
  spec.window_length = grid.window_length;
  spec.hop_length = grid.hop_length;
  spec.sample_rate_hz = grid.sample_rate_hz;
  return spec;
}

}  // namespace

WindowKind window_kind_from_name(const std::string& name) {
  if (name == "hann") return WindowKind::Hann;
  if (name == "rect" || name == "rectangular") return WindowKind::Rectangular;
  throw ConfigError("unknown window function '" + name + "'");
}

std::string window_kind_name(WindowKind kind) {
  return kind == WindowKind::Hann ? "hann" : "rect";
}

ComplexGrid stft(const AudioClip& clip, int64_t window_length,
                 int64_t hop_length, WindowKind window) {
  if (window_length < 2 || window_length % 2 != 0) {
    throw ConfigError("stft window length must be even and at least 2, got " +
                      std::to_string(window_length));
  }
  if (hop_length < 1 || hop_length > window_length) {
    throw ConfigError("stft hop must satisfy 0 < hop <= window, got hop " +
                      std::to_string(hop_length) + " for window " +
                      std::to_string(window_length));
  }

  const int64_t n = int64_t(clip.samples.size());
  const int64_t frames =
      n <= window_length
          ? 1
          : 1 + (n - window_length + hop_length - 1) / hop_length;
  const int64_t bins = window_length / 2 + 1;

  const std::vector<double> win = make_window(window, window_length);

  ComplexGrid grid;
  grid.rows = bins;
  grid.cols = frames;
  grid.values.assign(std::size_t(bins * frames), cdouble(0.0));
  grid.window_length = window_length;
  grid.hop_length = hop_length;
  grid.sample_rate_hz = clip.sample_rate_hz;

  std::vector<cdouble> frame(static_cast<std::size_t>(window_length));
  for (int64_t t = 0; t < frames; ++t) {
    const int64_t start = t * hop_length;
    for (int64_t i = 0; i < window_length; ++i) {
      const int64_t src = start + i;
      const double sample = src < n ? clip.samples[std::size_t(src)] : 0.0;
      frame[std::size_t(i)] = sample * win[std::size_t(i)];
    }
    const std::vector<cdouble> spectrum = fft(frame);
    for (int64_t k = 0; k < bins; ++k) {
      grid.at(k, t) = spectrum[std::size_t(k)];
    }
  }
  return grid;
}

Spectrogram to_log_magnitude(const ComplexGrid& grid) {
  return magnitude_grid(grid, true);
}

Spectrogram to_magnitude(const ComplexGrid& grid) {
  return magnitude_grid(grid, false);
}

Spectrogram resize_width(const Spectrogram& spec, int64_t target_frames) {
  if (target_frames < 1) {
    throw ConfigError("resize_width target must be at least 1 frame");
  }
  const int64_t rows = spec.bins();
  const int64_t cols = spec.frames();
  if (cols < 1) throw ShapeError("resize_width needs at least one frame");

  Spectrogram out = spec;
  if (cols == target_frames) {
    out.values = spec.values.clone();
    return out;
  }
  out.values = Tensor({rows, target_frames});
  const auto src = spec.values.data();
  auto dst = out.values.data();
  for (int64_t j = 0; j < target_frames; ++j) {
    const double x = target_frames == 1
                         ? 0.0
                         : double(j) * double(cols - 1) / double(target_frames - 1);
    const auto lo = int64_t(x);
    const auto hi = std::min(lo + 1, cols - 1);
    const double frac = x - double(lo);
    for (int64_t r = 0; r < rows; ++r) {
      dst[std::size_t(r * target_frames + j)] =
          src[std::size_t(r * cols + lo)] * (1.0 - frac) +
          src[std::size_t(r * cols + hi)] * frac;
    }
  }
  return out;
}

Spectrogram compute_spectrogram(const AudioClip& clip,
                                const SpectrogramOptions& options) {
  const AudioClip at_rate = clip.sample_rate_hz == options.target_rate_hz
                                ? clip
                                : resample_linear(clip, options.target_rate_hz);
  const ComplexGrid grid =
      stft(at_rate, options.window_length, options.hop_length, options.window);
  Spectrogram spec =
      options.log_compress ? to_log_magnitude(grid) : to_magnitude(grid);

  // Keep only the first out_bins rows (drops the Nyquist row with the
  // default 384-sample window).
  const int64_t keep = std::min(options.out_bins, spec.bins());
  if (keep != spec.bins()) {
    Tensor trimmed({keep, spec.frames()});
    const auto src = spec.values.data();
    std::copy(src.begin(), src.begin() + std::size_t(keep * spec.frames()),
              trimmed.data().begin());
    spec.values = trimmed;
  }

  spec = resize_width(spec, options.out_frames);

  auto v = spec.values.data();
  double lo = v[0], hi = v[0];
  for (double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (hi > lo) {
    for (double& x : v) x = (x - lo) / (hi - lo);
  } else {
    for (double& x : v) x = 0.0;
  }
  return spec;
}

Tensor spectrogram_pipeline(const AudioClip& clip,
                            const SpectrogramOptions& options) {
  const Spectrogram spec = compute_spectrogram(clip, options);
  return spec.values.reshape({1, spec.bins(), spec.frames()});
}

void export_pgm(const Spectrogram& spec, const std::filesystem::path& path) {
  const int64_t rows = spec.bins();
  const int64_t cols = spec.frames();
  if (rows < 1 || cols < 1) throw ShapeError("export_pgm on an empty spectrogram");

  const auto v = spec.values.data();
  double lo = v[0], hi = v[0];
  for (double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }

  std::string body;
  body.reserve(std::size_t(rows * cols));
  for (int64_t r = rows - 1; r >= 0; --r) {  // frequency row 0 at the bottom
    for (int64_t c = 0; c < cols; ++c) {
      const double x = v[std::size_t(r * cols + c)];
      const double scaled = hi > lo ? 255.0 * (x - lo) / (hi - lo) : 0.0;
      body.push_back(char(static_cast<unsigned char>(std::lround(scaled))));
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "P5\n" << cols << " " << rows << "\n255\n";
  out.write(body.data(), std::streamsize(body.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace emofuse
