#include "emofuse/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "emofuse/error.hpp"

namespace emofuse {

namespace {

// Reads one whitespace-delimited token, skipping '#' comment lines.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (!std::isspace(c)) {
      tok.push_back(char(c));
      break;
    }
  }
  while ((c = in.get()) != EOF && !std::isspace(c)) tok.push_back(char(c));
  return tok;
}

std::int64_t parse_dim(const std::string& tok, const std::string& what,
                       const std::filesystem::path& path) {
  try {
    const long long v = std::stoll(tok);
    if (v <= 0) throw std::out_of_range("non-positive");
    return v;
  } catch (const std::exception&) {
    throw FormatError(path.string() + ": invalid " + what + " '" + tok + "'");
  }
}

}  // namespace

Tensor load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image " + path.string());

  const std::string magic = next_token(in);
  if (magic != "P5" && magic != "P6") {
    throw FormatError(path.string() + ": unsupported format '" + magic +
                      "', expected binary PGM (P5) or PPM (P6)");
  }
  const int channels = magic == "P5" ? 1 : 3;
  const std::int64_t width = parse_dim(next_token(in), "width", path);
  const std::int64_t height = parse_dim(next_token(in), "height", path);
  const std::int64_t maxval = parse_dim(next_token(in), "maxval", path);
  if (maxval > 255) {
    throw FormatError(path.string() + ": 16-bit samples (maxval " +
                      std::to_string(maxval) + ") not supported");
  }

  const std::size_t n_bytes = std::size_t(width * height) * std::size_t(channels);
  std::string raw(n_bytes, '\0');
  in.read(raw.data(), std::streamsize(n_bytes));
  if (std::size_t(in.gcount()) != n_bytes) {
    throw IoError(path.string() + ": truncated pixel data");
  }

  Tensor image({height, width});
  auto px = image.data();
  const auto* bytes = reinterpret_cast<const unsigned char*>(raw.data());
  for (std::size_t i = 0; i < std::size_t(height * width); ++i) {
    double v;
    if (channels == 1) {
      v = double(bytes[i]);
    } else {
      const unsigned char* rgb = bytes + 3 * i;
      v = 0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2];
    }
    px[i] = v / double(maxval);
  }
  return image;
}

void save_pgm(const Tensor& image, const std::filesystem::path& path) {
  if (image.rank() != 2) {
    throw ShapeError("save_pgm expects a rank-2 image, got " +
                     image.shape_string());
  }
  const std::int64_t h = image.extent(0), w = image.extent(1);
  std::string body;
  body.reserve(std::size_t(h * w));
  for (double v : image.data()) {
    const double clamped = std::clamp(v, 0.0, 1.0);
    body.push_back(char(static_cast<unsigned char>(std::lround(255.0 * clamped))));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "P5\n" << w << " " << h << "\n255\n";
  out.write(body.data(), std::streamsize(body.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

double sample_bilinear(const Tensor& image, double y, double x) {
  const std::int64_t h = image.extent(0), w = image.extent(1);
  const auto px = image.data();
  const double yc = std::clamp(y, 0.0, double(h - 1));
  const double xc = std::clamp(x, 0.0, double(w - 1));
  const auto y0 = std::int64_t(yc);
  const auto x0 = std::int64_t(xc);
  const std::int64_t y1 = std::min(y0 + 1, h - 1);
  const std::int64_t x1 = std::min(x0 + 1, w - 1);
  const double fy = yc - double(y0);
  const double fx = xc - double(x0);
  const double top = px[std::size_t(y0 * w + x0)] * (1.0 - fx) +
                     px[std::size_t(y0 * w + x1)] * fx;
  const double bottom = px[std::size_t(y1 * w + x0)] * (1.0 - fx) +
                        px[std::size_t(y1 * w + x1)] * fx;
  return top * (1.0 - fy) + bottom * fy;
}

}  // namespace emofuse
