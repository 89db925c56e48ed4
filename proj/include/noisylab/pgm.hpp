#pragma once

#include <filesystem>

#include "noisylab/normalization.hpp"

namespace noisylab {

struct PgmImage {
  GrayImage<double> pixels;  // raw integer counts
  int maxval = 255;
};

/// Binary PGM (P5), 8-bit or 16-bit big-endian samples.
PgmImage read_pgm(const std::filesystem::path& path);

/// Writes raw counts; values are rounded and must fit in [0, maxval].
void write_pgm(const std::filesystem::path& path, const GrayImage<double>& pixels, int maxval);

/// Writes a [0, 1] image as 16-bit, scaling to [0, 65535].
void write_pgm_unit16(const std::filesystem::path& path, const GrayImage<double>& unit);

}  // namespace noisylab
