#include "cmsa/pnm.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <string>

#include "cmsa/errors.hpp"

namespace cmsa {

namespace {

void write_raster(const std::filesystem::path& path, const char* magic, const PnmImage& image,
                  std::size_t channels) {
  if (image.channels != channels || image.pixels.size() != image.width * image.height * channels) {
    throw DimError(std::string("pnm: image buffer does not match ") + magic + " layout");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << magic << "\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw IoError("short write to " + path.string());
}

// Next whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in, const std::filesystem::path& path) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  if (tok.empty()) throw ParseError(path.string() + ": truncated header");
  return tok;
}

std::size_t parse_extent(const std::string& tok, const std::filesystem::path& path) {
  std::size_t v = 0;
  for (char c : tok) {
    if (c < '0' || c > '9') throw ParseError(path.string() + ": non-numeric header field '" + tok + "'");
    v = v * 10 + static_cast<std::size_t>(c - '0');
    if (v > (1u << 20)) throw ParseError(path.string() + ": implausible extent " + tok);
  }
  return v;
}

PnmImage read_raster(const std::filesystem::path& path, const char* magic, std::size_t channels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  if (next_token(in, path) != magic) {
    throw ParseError(path.string() + ": expected magic " + magic);
  }
  PnmImage image;
  image.width = parse_extent(next_token(in, path), path);
  image.height = parse_extent(next_token(in, path), path);
  const std::size_t maxval = parse_extent(next_token(in, path), path);
  if (maxval != 255) throw ParseError(path.string() + ": only maxval 255 is supported");
  if (image.width == 0 || image.height == 0) throw ParseError(path.string() + ": empty raster");
  image.channels = channels;
  image.pixels.resize(image.width * image.height * channels);
  in.read(reinterpret_cast<char*>(image.pixels.data()),
          static_cast<std::streamsize>(image.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(image.pixels.size())) {
    throw ParseError(path.string() + ": truncated pixel data");
  }
  return image;
}

}  // namespace

void write_ppm(const std::filesystem::path& path, const PnmImage& image) {
  write_raster(path, "P6", image, 3);
}

void write_pgm(const std::filesystem::path& path, const PnmImage& image) {
  write_raster(path, "P5", image, 1);
}

void write_pbm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               const std::vector<std::uint8_t>& bits, bool ascii) {
  if (bits.size() != width * height) throw DimError("pnm: bitmap buffer does not match extents");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  if (ascii) {
    out << "P1\n" << width << " " << height << "\n";
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) {
        out << (bits[y * width + x] ? '1' : '0');
        out << (x + 1 == width ? '\n' : ' ');
      }
    }
  } else {
    out << "P4\n" << width << " " << height << "\n";
    const std::size_t row_bytes = (width + 7) / 8;
    std::vector<std::uint8_t> packed(row_bytes, 0);
    for (std::size_t y = 0; y < height; ++y) {
      std::fill(packed.begin(), packed.end(), 0);
      for (std::size_t x = 0; x < width; ++x) {
        if (bits[y * width + x]) packed[x / 8] |= static_cast<std::uint8_t>(0x80u >> (x % 8));
      }
      out.write(reinterpret_cast<const char*>(packed.data()),
                static_cast<std::streamsize>(packed.size()));
    }
  }
  if (!out) throw IoError("short write to " + path.string());
}

PnmImage read_ppm(const std::filesystem::path& path) { return read_raster(path, "P6", 3); }

PnmImage read_pgm(const std::filesystem::path& path) { return read_raster(path, "P5", 1); }

}  // namespace cmsa
