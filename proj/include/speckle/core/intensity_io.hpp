#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "speckle/core/propagation.hpp"
#include "speckle/core/types.hpp"
#include "speckle/ingest/pgm.hpp"

namespace speckle {

inline constexpr const char* kIntensityMagic = "SPECKLE-INTENSITY 1";

/// Free-form key/value pairs stored in the intensity file header (e.g. geometry).
using HeaderFields = std::map<std::string, std::string>;

namespace detail {

inline std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(v);
  return v;
}

inline std::string fmt17(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

}  // namespace detail

inline HeaderFields geometry_fields(const SourceGeometry& g) {
  return {{"wavelength", detail::fmt17(g.wavelength())},
          {"radius", detail::fmt17(g.radius())},
          {"distance", detail::fmt17(g.distance())},
          {"region_pitch", detail::fmt17(g.region_pitch())},
          {"regions", std::to_string(g.region_count())}};
}

/// Text header lines terminated by "end", then width*height little-endian float64.
inline void write_intensity(std::ostream& out, const IntensityMap& map, const HeaderFields& extra = {}) {
  const auto& g = map.grid();
  out << kIntensityMagic << '\n'
      << "width " << g.width << '\n'
      << "height " << g.height << '\n'
      << "pixel_pitch " << detail::fmt17(g.pixel_pitch) << '\n'
      << "origin_x " << detail::fmt17(g.origin.x) << '\n'
      << "origin_y " << detail::fmt17(g.origin.y) << '\n';
  for (const auto& [k, v] : extra) {
    if (k.empty() || k.find_first_of(" \n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw InvalidArgument("header keys must be single words and values single lines: " + k);
    }
    out << k << ' ' << v << '\n';
  }
  out << "end\n";
  for (double v : map.values()) {
    const std::uint64_t le = detail::to_le(std::bit_cast<std::uint64_t>(v));
    out.write(reinterpret_cast<const char*>(&le), sizeof le);
  }
}

struct IntensityFile {
  IntensityMap map;
  HeaderFields fields;
};

inline IntensityFile read_intensity(std::istream& in, const std::string& name = "<stream>") {
  std::string line;
  if (!std::getline(in, line) || line != kIntensityMagic) {
    throw FormatError(name + ": missing intensity file magic");
  }
  HeaderFields fields;
  for (;;) {
    if (!std::getline(in, line)) throw FormatError(name + ": header not terminated by 'end'");
    if (line == "end") break;
    const auto sp = line.find(' ');
    if (sp == std::string::npos) throw FormatError(name + ": malformed header line '" + line + "'");
    fields[line.substr(0, sp)] = line.substr(sp + 1);
  }
  auto take = [&](const std::string& key) {
    auto it = fields.find(key);
    if (it == fields.end()) throw FormatError(name + ": header lacks '" + key + "'");
    std::string v = it->second;
    fields.erase(it);
    return v;
  };
  DetectorGrid grid;
  try {
    grid.width = std::stoi(take("width"));
    grid.height = std::stoi(take("height"));
    grid.pixel_pitch = std::stod(take("pixel_pitch"));
    grid.origin.x = std::stod(take("origin_x"));
    grid.origin.y = std::stod(take("origin_y"));
  } catch (const std::logic_error&) {
    throw FormatError(name + ": non-numeric grid field");
  }
  if (grid.width < 1 || grid.height < 1 || !(grid.pixel_pitch > 0.0)) {
    throw FormatError(name + ": invalid grid in header");
  }
  std::vector<double> values(grid.pixel_count());
  for (double& v : values) {
    std::uint64_t le = 0;
    if (!in.read(reinterpret_cast<char*>(&le), sizeof le)) throw FormatError(name + ": truncated payload");
    v = std::bit_cast<double>(detail::to_le(le));
  }
  return IntensityFile{IntensityMap(grid, std::move(values)), std::move(fields)};
}

inline void save_intensity(const std::filesystem::path& path, const IntensityMap& map,
                           const HeaderFields& extra = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_intensity(out, map, extra);
  if (!out) throw IoError("write failed for " + path.string());
}

inline IntensityFile load_intensity(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_intensity(in, path.string());
}

/// 8-bit rendering: values are scaled so the given quantile maps to 255 and
/// anything brighter is clipped.
inline GrayImage to_gray(const IntensityMap& map, double saturation_quantile = 0.99) {
  detail::require(saturation_quantile > 0.0 && saturation_quantile <= 1.0,
                  "saturation quantile must lie in (0, 1]");
  std::vector<double> sorted(map.values().begin(), map.values().end());
  const std::size_t idx = std::min(sorted.size() - 1,
                                   static_cast<std::size_t>(std::ceil(saturation_quantile * sorted.size())) - 1);
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(idx), sorted.end());
  const double sat = sorted[idx];
  std::vector<std::uint8_t> px(map.values().size());
  for (std::size_t p = 0; p < px.size(); ++p) {
    const double v = sat > 0.0 ? map.values()[p] / sat : 0.0;
    px[p] = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
  }
  return GrayImage::create(map.width(), map.height(), std::move(px));
}

inline void export_pgm(const std::filesystem::path& path, const IntensityMap& map,
                       double saturation_quantile = 0.99) {
  save_pgm(path, to_gray(map, saturation_quantile));
}

}  // namespace speckle
