#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "speckle/core/intensity_io.hpp"
#include "speckle/core/types.hpp"
#include "speckle/gabor/gabor.hpp"

namespace speckle::gabor {

inline constexpr const char* kBitsMagic = "SPECKLE-BITS 1";

namespace internal {

// LSB-first within each byte.
inline std::vector<std::uint8_t> pack(const std::vector<std::uint8_t>& bits) {
  std::vector<std::uint8_t> out((bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) out[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  return out;
}

inline std::vector<std::uint8_t> unpack(const std::vector<std::uint8_t>& bytes, std::size_t n) {
  std::vector<std::uint8_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = (bytes[i / 8] >> (i % 8)) & 1u;
  return out;
}

}  // namespace internal

/// Text header, "end", then packed bits and packed mask.
inline void write_bitstring(std::ostream& out, const RobustBitstring& b) {
  const auto& g = b.grid;
  out << kBitsMagic << '\n'
      << "w " << detail::fmt17(g.w) << '\n'
      << "k_mag " << detail::fmt17(g.k_mag) << '\n'
      << "psi1 " << detail::fmt17(g.psi1) << '\n'
      << "ell " << detail::fmt17(g.ell) << '\n'
      << "width " << g.width << '\n'
      << "height " << g.height << '\n'
      << "lattice_x " << g.count_x() << '\n'
      << "lattice_y " << g.count_y() << '\n'
      << "threshold " << detail::fmt17(b.threshold) << '\n'
      << "bits " << b.size() << '\n'
      << "robust " << b.robust_count() << '\n'
      << "end\n";
  for (const auto* v : {&b.bits, &b.mask}) {
    const auto packed = internal::pack(*v);
    out.write(reinterpret_cast<const char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
  }
}

inline RobustBitstring read_bitstring(std::istream& in, const std::string& name = "<stream>") {
  std::string line;
  if (!std::getline(in, line) || line != kBitsMagic) throw FormatError(name + ": missing bitstring magic");
  std::map<std::string, std::string> f;
  for (;;) {
    if (!std::getline(in, line)) throw FormatError(name + ": header not terminated by 'end'");
    if (line == "end") break;
    const auto sp = line.find(' ');
    if (sp == std::string::npos) throw FormatError(name + ": malformed header line '" + line + "'");
    f[line.substr(0, sp)] = line.substr(sp + 1);
  }
  auto get = [&](const char* key) {
    auto it = f.find(key);
    if (it == f.end()) throw FormatError(name + ": header lacks '" + key + "'");
    return it->second;
  };
  RobustBitstring b;
  std::size_t n = 0, robust = 0;
  try {
    b.grid = GaborGrid::create(std::stod(get("w")), std::stod(get("k_mag")), std::stod(get("psi1")),
                               std::stod(get("ell")), std::stoi(get("width")), std::stoi(get("height")));
    b.threshold = std::stod(get("threshold"));
    n = std::stoull(get("bits"));
    robust = std::stoull(get("robust"));
  } catch (const std::logic_error&) {
    throw FormatError(name + ": invalid header field");
  }
  if (n != 2 * b.grid.points()) throw FormatError(name + ": bit count does not match the lattice");
  for (auto* v : {&b.bits, &b.mask}) {
    std::vector<std::uint8_t> packed((n + 7) / 8);
    if (!in.read(reinterpret_cast<char*>(packed.data()), static_cast<std::streamsize>(packed.size()))) {
      throw FormatError(name + ": truncated payload");
    }
    *v = internal::unpack(packed, n);
  }
  if (b.robust_count() != robust) throw FormatError(name + ": robust count does not match the mask");
  for (std::size_t i = 0; i < n; ++i)
    if (b.bits[i] && !b.mask[i]) throw FormatError(name + ": bit set outside the mask");
  return b;
}

inline void save_bitstring(const std::filesystem::path& path, const RobustBitstring& b) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_bitstring(out, b);
  if (!out) throw IoError("write failed for " + path.string());
}

inline RobustBitstring load_bitstring(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_bitstring(in, path.string());
}

/// CSV rows x,y,direction,G with x, y the center in pixel coordinates.
inline void write_gabor_csv(std::ostream& out, const GaborMap& m) {
  out << "x,y,direction,G\r\n";
  out << std::setprecision(17);
  const auto& g = m.grid;
  for (int d = 0; d < 2; ++d)
    for (int iy = 0; iy < g.count_y(); ++iy)
      for (int ix = 0; ix < g.count_x(); ++ix) {
        const Vec2 c = g.center(ix, iy);
        out << c.x << ',' << c.y << ',' << d + 1 << ',' << m.at(d, ix, iy) << "\r\n";
      }
}

}  // namespace speckle::gabor
