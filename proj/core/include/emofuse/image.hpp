#pragma once

#include <filesystem>

#include "emofuse/tensor.hpp"

namespace emofuse {

/// Reads a binary PGM (P5) or PPM (P6) image into a rank-2 grayscale
/// tensor with values in [0, 1]; color images are converted to luminance
/// (0.299 R + 0.587 G + 0.114 B). Row 0 is the top of the image.
Tensor load_image(const std::filesystem::path& path);

/// Writes a rank-2 tensor with values in [0, 1] as an 8-bit binary PGM,
/// row 0 at the top.
void save_pgm(const Tensor& image, const std::filesystem::path& path);

/// Bilinear sample with border replication; y and x may fall anywhere.
double sample_bilinear(const Tensor& image, double y, double x);

}  // namespace emofuse
