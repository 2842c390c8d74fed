#pragma once

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "speckle/core/types.hpp"

namespace speckle {

/// 8-bit grayscale image, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  static GrayImage create(int width, int height, std::vector<std::uint8_t> pixels) {
    detail::require(width > 0 && height > 0, "image dimensions must be positive");
    detail::require(pixels.size() == static_cast<std::size_t>(width) * height,
                    "pixel count must equal width * height");
    return GrayImage{width, height, std::move(pixels)};
  }

  std::uint8_t at(int col, int row) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
  bool operator==(const GrayImage&) const = default;
};

enum class PgmFormat { Ascii, Binary };

namespace detail {

inline void skip_ws_and_comments(std::istream& in) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      in.get();
    } else {
      return;
    }
  }
}

inline long read_header_int(std::istream& in, const std::string& what, const std::string& name) {
  skip_ws_and_comments(in);
  long v = -1;
  if (!(in >> v)) throw FormatError(name + ": malformed PGM header (" + what + ")");
  return v;
}

}  // namespace detail

inline GrayImage read_pgm(std::istream& in, const std::string& name = "<stream>") {
  char magic[2] = {0, 0};
  if (!in.read(magic, 2) || magic[0] != 'P' || (magic[1] != '2' && magic[1] != '5')) {
    throw FormatError(name + ": not a P2/P5 PGM file");
  }
  const long w = detail::read_header_int(in, "width", name);
  const long h = detail::read_header_int(in, "height", name);
  const long maxval = detail::read_header_int(in, "maxval", name);
  if (w <= 0 || h <= 0) throw FormatError(name + ": non-positive PGM dimensions");
  if (maxval <= 0 || maxval > 65535) throw FormatError(name + ": invalid maxval");
  if (maxval > 255) {
    throw FormatError(name + ": unsupported bit depth (maxval " + std::to_string(maxval) +
                      " > 255)");
  }
  const std::size_t count = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  std::vector<std::uint8_t> px(count);
  if (magic[1] == '5') {
    const int sep = in.get();
    if (sep == EOF || !std::isspace(sep)) throw FormatError(name + ": malformed PGM header");
    if (!in.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(count))) {
      throw FormatError(name + ": truncated PGM pixel data");
    }
    for (auto v : px) {
      if (v > maxval) throw FormatError(name + ": pixel value exceeds maxval");
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      detail::skip_ws_and_comments(in);
      long v = -1;
      if (!(in >> v)) throw FormatError(name + ": truncated PGM pixel data");
      if (v < 0 || v > maxval) throw FormatError(name + ": pixel value outside [0, maxval]");
      px[i] = static_cast<std::uint8_t>(v);
    }
  }
  return GrayImage{static_cast<int>(w), static_cast<int>(h), std::move(px)};
}

inline GrayImage load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_pgm(in, path.string());
}

inline void write_pgm(std::ostream& out, const GrayImage& img, PgmFormat format = PgmFormat::Binary) {
  if (format == PgmFormat::Binary) {
    out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
  } else {
    out << "P2\n" << img.width << ' ' << img.height << "\n255\n";
    for (int r = 0; r < img.height; ++r) {
      for (int c = 0; c < img.width; ++c) {
        out << static_cast<int>(img.at(c, r)) << (c + 1 == img.width ? '\n' : ' ');
      }
    }
  }
}

inline void save_pgm(const std::filesystem::path& path, const GrayImage& img,
                     PgmFormat format = PgmFormat::Binary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_pgm(out, img, format);
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace speckle
