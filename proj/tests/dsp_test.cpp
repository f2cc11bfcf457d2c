#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "emofuse/audio.hpp"
#include "emofuse/error.hpp"
#include "emofuse/spectrogram.hpp"
#include "oracles.hpp"

using namespace emofuse;

namespace {

namespace fs = std::filesystem;

fs::path test_dir() {
  const fs::path dir = fs::path(::testing::TempDir()) / "emofuse_dsp";
  fs::create_directories(dir);
  return dir;
}

void append_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

void append_u16(std::string& out, std::uint16_t v) {
  out.push_back(char(v & 0xff));
  out.push_back(char((v >> 8) & 0xff));
}

// Builds a PCM WAV byte string by hand (independent of write_wav).
std::string raw_wav(std::uint16_t channels, std::uint16_t bits,
                    std::uint32_t rate,
                    const std::vector<std::int16_t>& interleaved) {
  std::string out = "RIFF";
  const std::uint32_t data_len = std::uint32_t(interleaved.size()) * 2;
  append_u32(out, 36 + data_len);
  out += "WAVEfmt ";
  append_u32(out, 16);
  append_u16(out, 1);
  append_u16(out, channels);
  append_u32(out, rate);
  append_u32(out, rate * channels * (bits / 8));
  append_u16(out, std::uint16_t(channels * (bits / 8)));
  append_u16(out, bits);
  out += "data";
  append_u32(out, data_len);
  for (const std::int16_t s : interleaved) {
    append_u16(out, std::uint16_t(s));
  }
  return out;
}

fs::path write_bytes(const std::string& name, const std::string& bytes) {
  const fs::path path = test_dir() / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), std::streamsize(bytes.size()));
  return path;
}

AudioClip tone(double freq_hz, double seconds, int rate,
               double amplitude = 0.5) {
  AudioClip clip;
  clip.sample_rate_hz = rate;
  const auto n = std::size_t(seconds * rate);
  clip.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    clip.samples[i] = amplitude * std::cos(2.0 * std::numbers::pi * freq_hz *
                                           double(i) / double(rate));
  }
  return clip;
}

std::vector<double> hann_window(std::int64_t n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    w[std::size_t(i)] =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * double(i) / double(n));
  }
  return w;
}

}  // namespace

TEST(LoadWav, SecondOfSilence) {
  const fs::path path =
      write_bytes("silence.wav",
                  raw_wav(1, 16, 16000, std::vector<std::int16_t>(16000, 0)));
  const AudioClip clip = load_wav(path);
  EXPECT_EQ(clip.sample_rate_hz, 16000);
  ASSERT_EQ(clip.samples.size(), 16000u);
  for (double s : clip.samples) EXPECT_EQ(s, 0.0);
}

TEST(LoadWav, StereoChannelsAverage) {
  // Constant +0.5 / -0.5 channels cancel to silence.
  std::vector<std::int16_t> interleaved;
  for (int i = 0; i < 64; ++i) {
    interleaved.push_back(16384);
    interleaved.push_back(-16384);
  }
  const fs::path path =
      write_bytes("stereo.wav", raw_wav(2, 16, 8000, interleaved));
  const AudioClip clip = load_wav(path);
  ASSERT_EQ(clip.samples.size(), 64u);
  for (double s : clip.samples) EXPECT_EQ(s, 0.0);
}

TEST(LoadWav, Int16ScalingIsPowerOfTwo) {
  const fs::path path = write_bytes(
      "scale.wav", raw_wav(1, 16, 8000, {16384, -16384, 32767, -32768}));
  const AudioClip clip = load_wav(path);
  ASSERT_EQ(clip.samples.size(), 4u);
  EXPECT_DOUBLE_EQ(clip.samples[0], 0.5);  // 16384 / 32768
  EXPECT_DOUBLE_EQ(clip.samples[1], -0.5);
  EXPECT_DOUBLE_EQ(clip.samples[2], 32767.0 / 32768.0);
  EXPECT_DOUBLE_EQ(clip.samples[3], -1.0);
}

TEST(LoadWav, RejectsNonWave) {
  const fs::path path = write_bytes("not.wav", "RIFFxxxxJUNK");
  EXPECT_THROW(load_wav(path), FormatError);
}

TEST(LoadWav, RejectsUnsupportedBitDepthNamingChunk) {
  std::string bytes = raw_wav(1, 8, 8000, {0, 0});
  const fs::path path = write_bytes("depth.wav", bytes);
  try {
    load_wav(path);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("fmt "), std::string::npos);
  }
}

TEST(LoadWav, RejectsTruncatedData) {
  std::string bytes = raw_wav(1, 16, 8000, std::vector<std::int16_t>(32, 5));
  bytes.resize(bytes.size() - 20);  // cut into the data chunk
  const fs::path path = write_bytes("trunc.wav", bytes);
  EXPECT_THROW(load_wav(path), IoError);
}

TEST(WavRoundTrip, WriteThenReadQuantizes) {
  AudioClip clip;
  clip.sample_rate_hz = 16000;
  clip.samples = {0.0, 0.5, -0.5, 0.25};
  const fs::path path = test_dir() / "round.wav";
  write_wav(path, clip);
  const AudioClip back = load_wav(path);
  ASSERT_EQ(back.samples.size(), clip.samples.size());
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    EXPECT_NEAR(back.samples[i], clip.samples[i], 1.0 / 32768.0);
  }
}

TEST(Stft, AllZeroClipGivesAllZeroGrid) {
  AudioClip clip;
  clip.sample_rate_hz = 16000;
  clip.samples.assign(4000, 0.0);
  const ComplexGrid grid = stft(clip, 256, 128);
  EXPECT_EQ(grid.rows, 129);
  for (const auto& z : grid.values) {
    EXPECT_EQ(std::abs(z), 0.0);
  }
}

TEST(Stft, ColumnCountMatchesPaddingPolicy) {
  AudioClip clip;
  clip.sample_rate_hz = 16000;
  clip.samples.assign(1000, 0.1);
  const ComplexGrid grid = stft(clip, 256, 128);
  // 1000 samples: frames at 0,128,...; last start 768 covers 1024 padded.
  EXPECT_EQ(grid.cols, 1 + (1000 - 256 + 127) / 128);
}

TEST(Stft, PureCosineConcentratesAtItsBin) {
  const std::int64_t window = 256;
  const std::int64_t k0 = 32;
  const int rate = 16000;
  const double freq = double(k0) * double(rate) / double(window);
  const AudioClip clip = tone(freq, 0.5, rate);
  const ComplexGrid grid =
      stft(clip, window, window, WindowKind::Rectangular);
  for (std::int64_t t = 0; t < grid.cols - 1; ++t) {  // last frame is padded
    const double peak = std::abs(grid.at(k0, t));
    ASSERT_GT(peak, 1.0);
    for (std::int64_t k = 0; k < grid.rows; ++k) {
      if (k == k0) continue;
      EXPECT_LE(std::abs(grid.at(k, t)), 1e-9 * peak)
          << "bin " << k << " frame " << t;
    }
  }
}

TEST(Stft, MatchesNaiveDftOracle) {
  const Tensor noise = oracles::random_tensor({1024}, 77);
  AudioClip clip;
  clip.sample_rate_hz = 16000;
  clip.samples.assign(noise.data().begin(), noise.data().end());

  const ComplexGrid grid =
      stft(clip, 256, 256, WindowKind::Rectangular);
  const std::vector<double> rect(256, 1.0);
  for (std::int64_t t = 0; t < grid.cols; ++t) {
    const auto want =
        oracles::dft_frame_direct(clip.samples, t * 256, rect, grid.rows);
    for (std::int64_t k = 0; k < grid.rows; ++k) {
      EXPECT_NEAR(std::abs(grid.at(k, t) - want[std::size_t(k)]), 0.0, 1e-9);
    }
  }
}

TEST(Stft, MatchesOracleAcrossWindowLengthsWithHannAndHop) {
  for (const std::int64_t window : {64, 128, 256, 384}) {
    const Tensor noise = oracles::random_tensor({2000}, 80 + window);
    AudioClip clip;
    clip.sample_rate_hz = 16000;
    clip.samples.assign(noise.data().begin(), noise.data().end());
    const std::int64_t hop = window / 2;
    const ComplexGrid grid = stft(clip, window, hop, WindowKind::Hann);
    const auto window_values = hann_window(window);
    for (std::int64_t t = 0; t < grid.cols; t += 3) {
      const auto want = oracles::dft_frame_direct(clip.samples, t * hop,
                                                  window_values, grid.rows);
      for (std::int64_t k = 0; k < grid.rows; ++k) {
        ASSERT_NEAR(std::abs(grid.at(k, t) - want[std::size_t(k)]), 0.0, 1e-9)
            << "window " << window << " frame " << t << " bin " << k;
      }
    }
  }
}

TEST(Stft, ParsevalEnergyConservation) {
  const std::int64_t window = 128;
  const Tensor noise = oracles::random_tensor({1280}, 99);
  AudioClip clip;
  clip.sample_rate_hz = 16000;
  clip.samples.assign(noise.data().begin(), noise.data().end());

  const ComplexGrid grid =
      stft(clip, window, window, WindowKind::Rectangular);
  double spectral = 0.0;
  for (std::int64_t t = 0; t < grid.cols; ++t) {
    for (std::int64_t k = 0; k < grid.rows; ++k) {
      const double e = std::norm(grid.at(k, t));
      // bins 1..N/2-1 appear twice in the two-sided spectrum
      spectral += (k == 0 || k == window / 2) ? e : 2.0 * e;
    }
  }
  double time_energy = 0.0;
  for (double s : clip.samples) time_energy += s * s;
  EXPECT_NEAR(spectral, double(window) * time_energy,
              1e-6 * double(window) * time_energy);
}

TEST(Stft, RejectsBadHop) {
  AudioClip clip;
  clip.sample_rate_hz = 16000;
  clip.samples.assign(512, 0.0);
  EXPECT_THROW(stft(clip, 256, 0), ConfigError);
  EXPECT_THROW(stft(clip, 256, 257), ConfigError);
}

TEST(LogMagnitude, ZeroGridStaysZero) {
  AudioClip clip;
  clip.sample_rate_hz = 16000;
  clip.samples.assign(512, 0.0);
  const Spectrogram spec = to_log_magnitude(stft(clip, 128, 64));
  for (double v : spec.values.data()) EXPECT_EQ(v, 0.0);
}

TEST(LogMagnitude, KnownValueAndElementwiseScan) {
  ComplexGrid grid;
  grid.rows = 2;
  grid.cols = 2;
  grid.values = {std::complex<double>(std::numbers::e - 1.0, 0.0),
                 std::complex<double>(0.0, 0.0),
                 std::complex<double>(3.0, 4.0),
                 std::complex<double>(-1.0, 1.0)};
  const Spectrogram spec = to_log_magnitude(grid);
  EXPECT_NEAR(spec.values.at(0), 1.0, 1e-15);
  EXPECT_EQ(spec.values.at(1), 0.0);
  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    EXPECT_DOUBLE_EQ(spec.values.at(i), std::log1p(std::abs(grid.values[i])));
  }
  const Spectrogram raw = to_magnitude(grid);
  EXPECT_DOUBLE_EQ(raw.values.at(2), 5.0);
}

TEST(ResizeWidth, MatchingTargetIsBitIdentical) {
  Spectrogram spec;
  spec.values = oracles::random_tensor({192, 120}, 123);
  const Spectrogram out = resize_width(spec, 120);
  ASSERT_EQ(out.values.shape(), spec.values.shape());
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    EXPECT_EQ(out.values.at(i), spec.values.at(i));
  }
}

TEST(ResizeWidth, ConstantStaysConstant) {
  Spectrogram spec;
  spec.values = Tensor::full({5, 7}, 0.625);
  for (const std::int64_t target : {1, 3, 7, 20}) {
    const Spectrogram out = resize_width(spec, target);
    EXPECT_EQ(out.frames(), target);
    for (double v : out.values.data()) EXPECT_DOUBLE_EQ(v, 0.625);
  }
}

TEST(ResizeWidth, LinearInterpolationByHand) {
  Spectrogram spec;
  spec.values = Tensor::from_data({1, 2}, {0.0, 1.0});
  const Spectrogram out = resize_width(spec, 3);
  ASSERT_EQ(out.frames(), 3);
  EXPECT_DOUBLE_EQ(out.values.at(0), 0.0);
  EXPECT_DOUBLE_EQ(out.values.at(1), 0.5);
  EXPECT_DOUBLE_EQ(out.values.at(2), 1.0);
}

TEST(ResizeWidth, RejectsBadTarget) {
  Spectrogram spec;
  spec.values = Tensor::full({2, 2}, 1.0);
  EXPECT_THROW(resize_width(spec, 0), ConfigError);
}

TEST(Pipeline, SilenceGivesAllZeros) {
  AudioClip clip;
  clip.sample_rate_hz = 16000;
  clip.samples.assign(16000, 0.0);
  const Tensor out = spectrogram_pipeline(clip);
  EXPECT_EQ(out.shape(), (std::vector<std::int64_t>{1, 192, 120}));
  for (double v : out.data()) EXPECT_EQ(v, 0.0);
}

TEST(Pipeline, ShapeContractAcrossDurations) {
  for (const double seconds : {0.5, 1.0, 2.7, 10.0}) {
    const AudioClip clip = tone(440.0, seconds, 16000);
    const Tensor out = spectrogram_pipeline(clip);
    ASSERT_EQ(out.shape(), (std::vector<std::int64_t>{1, 192, 120}))
        << seconds << " s clip";
    for (double v : out.data()) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
  }
}

TEST(Pipeline, ResamplesForeignRates) {
  const AudioClip clip = tone(440.0, 1.0, 44100);
  const Tensor out = spectrogram_pipeline(clip);
  EXPECT_EQ(out.shape(), (std::vector<std::int64_t>{1, 192, 120}));
}

TEST(Pipeline, PureToneLightsItsBinRow) {
  // 2000 Hz sits exactly on bin 48 of a 384-sample window at 16 kHz.
  const std::int64_t bin = 48;
  const double freq = double(bin) * 16000.0 / 384.0;
  const AudioClip clip = tone(freq, 1.0, 16000);
  const Tensor out = spectrogram_pipeline(clip);
  std::vector<double> row_energy(192, 0.0);
  for (std::int64_t r = 0; r < 192; ++r) {
    for (std::int64_t c = 0; c < 120; ++c) {
      row_energy[std::size_t(r)] += out.at(std::size_t(r * 120 + c));
    }
  }
  std::int64_t brightest = 0;
  for (std::int64_t r = 1; r < 192; ++r) {
    if (row_energy[std::size_t(r)] > row_energy[std::size_t(brightest)]) {
      brightest = r;
    }
  }
  EXPECT_EQ(brightest, bin);
}

TEST(ExportPgm, HandQuantizedCheckerboard) {
  Spectrogram spec;
  spec.values = Tensor::from_data({2, 2}, {0.0, 1.0, 1.0, 0.0});
  const fs::path path = test_dir() / "check.pgm";
  export_pgm(spec, path);

  std::ifstream in(path, std::ios::binary);
  std::string contents((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  EXPECT_EQ(contents.substr(0, 10), "P5\n2 2\n255");
  ASSERT_GE(contents.size(), 4u);
  const auto* px =
      reinterpret_cast<const unsigned char*>(contents.data() + contents.size() - 4);
  // top scanline first = spectrogram row 1, bottom row 0 last
  EXPECT_EQ(px[0], 255);
  EXPECT_EQ(px[1], 0);
  EXPECT_EQ(px[2], 0);
  EXPECT_EQ(px[3], 255);
}

TEST(ExportPgm, ConstantSpectrogramIsBlack) {
  Spectrogram spec;
  spec.values = Tensor::full({3, 4}, 0.7);
  const fs::path path = test_dir() / "const.pgm";
  export_pgm(spec, path);
  std::ifstream in(path, std::ios::binary);
  std::string contents((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  for (std::size_t i = contents.size() - 12; i < contents.size(); ++i) {
    EXPECT_EQ(contents[i], 0);
  }
}

TEST(ExportPgm, PipelineOutputHeader) {
  const AudioClip clip = tone(500.0, 1.0, 16000);
  const Spectrogram spec = compute_spectrogram(clip);
  const fs::path path = test_dir() / "pipe.pgm";
  export_pgm(spec, path);
  std::ifstream in(path, std::ios::binary);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "P5");
  std::getline(in, header);
  EXPECT_EQ(header, "120 192");
  std::getline(in, header);
  EXPECT_EQ(header, "255");
}
