#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace cmsa {

struct PnmImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;               // 1 for PGM, 3 for PPM
  std::vector<std::uint8_t> pixels;       // row-major, interleaved
};

/// Binary P6, maxval 255.
void write_ppm(const std::filesystem::path& path, const PnmImage& image);
/// Binary P5, maxval 255.
void write_pgm(const std::filesystem::path& path, const PnmImage& image);
/// Bitmap; P4 (packed) by default, P1 (ASCII) when requested. Nonzero
/// input bytes become 1-bits (black).
void write_pbm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               const std::vector<std::uint8_t>& bits, bool ascii = false);

/// Readers accept '#' comments in the header and raise ParseError with the
/// offending file named on any malformed or truncated content.
PnmImage read_ppm(const std::filesystem::path& path);
PnmImage read_pgm(const std::filesystem::path& path);

}  // namespace cmsa
