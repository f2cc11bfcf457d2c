#include "emofuse/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "emofuse/error.hpp"

namespace emofuse {

namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 |
         std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

std::uint16_t read_u16(const unsigned char* p) {
  return std::uint16_t(p[0]) | std::uint16_t(p[1]) << 8;
}

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(char(v & 0xff));
  out.push_back(char((v >> 8) & 0xff));
  out.push_back(char((v >> 16) & 0xff));
  out.push_back(char((v >> 24) & 0xff));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(char(v & 0xff));
  out.push_back(char((v >> 8) & 0xff));
}

}  // namespace

AudioClip load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open WAV file " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();

  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 ||
      std::memcmp(p + 8, "WAVE", 4) != 0) {
    throw FormatError(path.string() + ": not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  std::uint16_t format_tag = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= n) {
    const char* id = bytes.data() + pos;
    const std::uint32_t chunk_len = read_u32(p + pos + 4);
    pos += 8;
    if (pos + chunk_len > n) {
      throw IoError(path.string() + ": truncated chunk '" +
                    std::string(id, 4) + "'");
    }
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (chunk_len < 16) {
        throw FormatError(path.string() + ": 'fmt ' chunk too short");
      }
      format_tag = read_u16(p + pos);
      channels = read_u16(p + pos + 2);
      sample_rate = read_u32(p + pos + 4);
      bits = read_u16(p + pos + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = p + pos;
      data_len = chunk_len;
    }
    pos += chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (!have_fmt) throw FormatError(path.string() + ": missing 'fmt ' chunk");
  if (data == nullptr) throw FormatError(path.string() + ": missing 'data' chunk");
  if (format_tag != 1) {
    throw FormatError(path.string() + ": 'fmt ' declares codec " +
                      std::to_string(format_tag) + ", only PCM (1) supported");
  }
  if (bits != 16) {
    throw FormatError(path.string() + ": 'fmt ' declares " +
                      std::to_string(bits) + "-bit samples, only 16 supported");
  }
  if (channels != 1 && channels != 2) {
    throw FormatError(path.string() + ": 'fmt ' declares " +
                      std::to_string(channels) +
                      " channels, only mono/stereo supported");
  }
  if (sample_rate == 0) {
    throw FormatError(path.string() + ": 'fmt ' declares zero sample rate");
  }

  const std::size_t bytes_per_frame = std::size_t(channels) * 2;
  const std::size_t frames = data_len / bytes_per_frame;

  AudioClip clip;
  clip.sample_rate_hz = int(sample_rate);
  clip.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::uint16_t ch = 0; ch < channels; ++ch) {
      const unsigned char* s = data + i * bytes_per_frame + std::size_t(ch) * 2;
      const auto raw = std::int16_t(std::uint16_t(s[0]) | std::uint16_t(s[1]) << 8);
      acc += double(raw) / 32768.0;
    }
    clip.samples[i] = acc / double(channels);
  }
  return clip;
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip) {
  if (clip.sample_rate_hz <= 0) {
    throw ConfigError("write_wav needs a positive sample rate");
  }
  const std::uint32_t data_len = std::uint32_t(clip.samples.size()) * 2;
  std::string out;
  out.reserve(44 + data_len);
  out += "RIFF";
  put_u32(out, 36 + data_len);
  out += "WAVE";
  out += "fmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, std::uint32_t(clip.sample_rate_hz));
  put_u32(out, std::uint32_t(clip.sample_rate_hz) * 2);
  put_u16(out, 2);   // block align
  put_u16(out, 16);  // bits per sample
  out += "data";
  put_u32(out, data_len);
  for (double v : clip.samples) {
    const double clamped = std::clamp(v, -1.0, 32767.0 / 32768.0);
    const auto q = std::int16_t(std::lround(clamped * 32768.0));
    put_u16(out, std::uint16_t(q));
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write(out.data(), std::streamsize(out.size()));
  if (!f) throw IoError("failed writing " + path.string());
}

AudioClip resample_linear(const AudioClip& clip, int target_rate_hz) {
  if (target_rate_hz <= 0) {
    throw ConfigError("resample target rate must be positive");
  }
  if (clip.sample_rate_hz == target_rate_hz || clip.samples.empty()) {
    AudioClip same = clip;
    same.sample_rate_hz = target_rate_hz;
    return same;
  }
  const double ratio = double(clip.sample_rate_hz) / double(target_rate_hz);
  const auto n_out = std::size_t(
      std::ceil(double(clip.samples.size()) / ratio));
  AudioClip out;
  out.sample_rate_hz = target_rate_hz;
  out.samples.resize(std::max<std::size_t>(n_out, 1));
  const std::size_t last = clip.samples.size() - 1;
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    const double x = double(i) * ratio;
    const auto lo = std::min(std::size_t(x), last);
    const auto hi = std::min(lo + 1, last);
    const double frac = x - double(lo);
    out.samples[i] =
        clip.samples[lo] * (1.0 - frac) + clip.samples[hi] * frac;
  }
  return out;
}

}  // namespace emofuse
