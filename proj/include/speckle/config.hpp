#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "speckle/core/geometry.hpp"
#include "speckle/core/types.hpp"
#include "speckle/montecarlo/drift.hpp"
#include "speckle/montecarlo/ensemble.hpp"
#include "speckle/montecarlo/suites.hpp"
#include "speckle/theory/curves.hpp"

namespace speckle::config {

/// Flat "section.key" -> value store. Text form:
///
///   [grid]
///   width = 384     # comment
class KeyValues {
 public:
  static KeyValues parse(std::istream& in, const std::string& name = "<config>") {
    KeyValues kv;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const std::string where = name + ":" + std::to_string(lineno);
      if (line.front() == '[') {
        if (line.back() != ']') throw FormatError(where + ": unterminated section header");
        section = trim(line.substr(1, line.size() - 2));
        if (section.empty()) throw FormatError(where + ": empty section name");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw FormatError(where + ": expected key = value");
      const std::string key = trim(line.substr(0, eq));
      if (key.empty()) throw FormatError(where + ": empty key");
      kv.set(section.empty() ? key : section + "." + key, trim(line.substr(eq + 1)));
    }
    return kv;
  }

  static KeyValues load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path.string());
    return parse(in, path.string());
  }

  /// "section.key=value", as given after a leading "--".
  void apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw InvalidArgument("override '" + assignment + "' is not key=value");
    const std::string key = trim(assignment.substr(0, eq));
    if (key.find('.') == std::string::npos) throw InvalidArgument("override key '" + key + "' lacks a section");
    set(key, trim(assignment.substr(eq + 1)));
  }

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  }

  std::map<std::string, std::string> values_;
};

/// Number with "pi" accepted as a value.
inline double parse_number(const std::string& key, const std::string& text) {
  if (text == "pi") return std::numbers::pi;
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end || !std::isfinite(v)) {
    throw InvalidArgument("config key " + key + ": '" + text + "' is not a finite number");
  }
  return v;
}

inline std::string format_number(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

inline std::string format_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_number(v[i]);
  return out;
}

/// Everything a run needs, fully resolved.
struct RunConfig {
  // [source]
  double wavelength = 780e-9;
  double regions = 2000.0;
  double distance_over_lambda = 8000.0;
  double power = 1e-3;
  double exposure = 1e-3;
  // [grid]
  int width = 384;
  int height = 384;
  double pixels_per_M = 4.0;
  // [gabor]
  double w_over_M = 5.0;
  double wk = 1.5;
  double psi1 = 0.0;
  double ell_over_w = 0.5;
  // [ensemble]
  std::size_t trials = 60;
  std::uint64_t seed = 1;
  std::vector<double> q{0.0, 0.5, 1.0, 2.0, std::numbers::pi};
  std::vector<double> T{0.0, 1.0, 2.0};
  unsigned threads = 0;
  // [scan]
  mc::GaborScan scan;
  // [noise]
  double N_I = 1.0;
  double pixel_area = 1.0;
  double pedestal_sigmas = 12.0;
  std::vector<double> mi_snr{0.01, 0.02, 0.05, 100.0, 1000.0, 10000.0};
  // [drift]
  mc::DriftSuiteOptions drift;
  // [theory]
  double L = 800.0;
  double M = 3.0;
  double ell = 5.0;
  double t = 1.0;
  double snr = 10.0;
  double c1 = 0.0;
  double c2 = 1.0;
  std::vector<double> fig5_w{5.0, 10.0, 15.0, 20.0};
  double fig5_M = 5.0;
  int points = 50;
  // [output]
  std::string output_dir = "speckle-out";

  double radius() const { return wavelength * std::sqrt(regions / std::numbers::pi); }

  SourceGeometry geometry() const {
    return SourceGeometry::create(wavelength, radius(), distance_over_lambda * wavelength);
  }

  mc::EnsembleConfig ensemble() const {
    const auto g = geometry();
    const auto grid = DetectorGrid::create(width, height, g.speckle_scale() / pixels_per_M);
    const double w = w_over_M * pixels_per_M;
    mc::EnsembleConfig c{g,
                         grid,
                         gabor::GaborGrid::create(w, wk / w, psi1, std::max(1.0, ell_over_w * w), width, height),
                         trials,
                         seed,
                         q,
                         T,
                         scan};
    c.threads = threads;
    c.validate();
    return c;
  }

  mc::NoiseOptions noise() const {
    mc::NoiseOptions n;
    n.noise = theory::NoiseParams::create(N_I, pixel_area);
    n.pedestal_sigmas = pedestal_sigmas;
    n.mi_snr = mi_snr;
    return n;
  }

  theory::CurveParams curves() const {
    theory::CurveParams p;
    p.L = L;
    p.M = M;
    p.ell = ell;
    p.t = t;
    p.snr = snr;
    p.points = points;
    p.T_over_sigma = T;
    p.fig5_w = fig5_w;
    p.fig5_M = fig5_M;
    p.c1 = c1;
    p.c2 = c2;
    return p;
  }

  PhotonBudget budget() const { return PhotonBudget::create(geometry(), power, exposure); }

  /// Every key with its resolved value, sorted.
  KeyValues to_key_values() const {
    KeyValues kv;
    auto num = [&](const std::string& k, double v) { kv.set(k, format_number(v)); };
    num("source.wavelength", wavelength);
    num("source.regions", regions);
    num("source.distance_over_lambda", distance_over_lambda);
    num("source.power", power);
    num("source.exposure", exposure);
    num("grid.width", width);
    num("grid.height", height);
    num("grid.pixels_per_M", pixels_per_M);
    num("gabor.w_over_M", w_over_M);
    num("gabor.wk", wk);
    num("gabor.psi1", psi1);
    num("gabor.ell_over_w", ell_over_w);
    num("ensemble.trials", static_cast<double>(trials));
    kv.set("ensemble.seed", std::to_string(seed));
    kv.set("ensemble.q", format_list(q));
    kv.set("ensemble.T", format_list(T));
    num("ensemble.threads", threads);
    kv.set("scan.w_over_M", format_list(scan.w_over_M));
    kv.set("scan.wk", format_list(scan.wk));
    num("scan.tolerance", scan.tolerance);
    num("scan.max_side", scan.max_side);
    num("noise.N_I", N_I);
    num("noise.pixel_area", pixel_area);
    num("noise.pedestal_sigmas", pedestal_sigmas);
    kv.set("noise.mi_snr", format_list(mi_snr));
    num("drift.sequences", static_cast<double>(drift.sequences));
    num("drift.images", static_cast<double>(drift.images));
    num("drift.q_step", drift.q_step);
    num("drift.gain", drift.gain);
    num("drift.noise_sd", drift.noise_sd);
    num("drift.w_over_M", drift.w_over_M);
    num("drift.wk", drift.wk);
    num("theory.L", L);
    num("theory.M", M);
    num("theory.ell", ell);
    num("theory.t", t);
    num("theory.snr", snr);
    num("theory.c1", c1);
    num("theory.c2", c2);
    kv.set("theory.fig5_w", format_list(fig5_w));
    num("theory.fig5_M", fig5_M);
    num("theory.points", points);
    kv.set("output.dir", output_dir);
    return kv;
  }

  /// Text snapshot that resolves back to this configuration. Output location
  /// and thread cap are left out; neither changes any artifact.
  std::string snapshot() const {
    std::ostringstream out;
    std::string section;
    const auto kv = to_key_values();
    for (const auto& [key, value] : kv.values()) {
      if (key == "output.dir" || key == "ensemble.threads") continue;
      const auto dot = key.find('.');
      const std::string s = key.substr(0, dot);
      if (s != section) {
        out << (section.empty() ? "" : "\n") << "[" << s << "]\n";
        section = s;
      }
      out << key.substr(dot + 1) << " = " << value << "\n";
    }
    return out.str();
  }
};

namespace internal {

class Reader {
 public:
  explicit Reader(const KeyValues& kv) : kv_(kv) {}

  void number(const std::string& key, double& out) {
    if (auto v = take(key)) out = parse_number(key, *v);
  }
  void positive(const std::string& key, double& out) {
    number(key, out);
    if (!(out > 0.0)) throw InvalidArgument("config key " + key + ": must be > 0");
  }
  template <class Int>
  void integer(const std::string& key, Int& out, long long lo) {
    if (auto v = take(key)) {
      long long n = 0;
      const auto* end = v->data() + v->size();
      const auto [p, ec] = std::from_chars(v->data(), end, n);
      if (ec != std::errc() || p != end) throw InvalidArgument("config key " + key + ": '" + *v + "' is not an integer");
      if (n < lo) throw InvalidArgument("config key " + key + ": must be >= " + std::to_string(lo));
      out = static_cast<Int>(n);
    }
  }
  void list(const std::string& key, std::vector<double>& out) {
    if (auto v = take(key)) {
      out.clear();
      std::stringstream s(*v);
      std::string item;
      while (std::getline(s, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b == std::string::npos) throw InvalidArgument("config key " + key + ": empty list entry");
        out.push_back(parse_number(key, item.substr(b, e - b + 1)));
      }
      if (out.empty()) throw InvalidArgument("config key " + key + ": empty list");
    }
  }
  void text(const std::string& key, std::string& out) {
    if (auto v = take(key)) out = *v;
  }
  void seed(const std::string& key, std::uint64_t& out) {
    if (auto v = take(key)) {
      const auto* end = v->data() + v->size();
      const auto [p, ec] = std::from_chars(v->data(), end, out);
      if (ec != std::errc() || p != end) throw InvalidArgument("config key " + key + ": '" + *v + "' is not a seed");
    }
  }

  void reject_unknown() const {
    for (const auto& [key, value] : kv_.values())
      if (!used_.count(key)) throw InvalidArgument("unknown config key " + key);
  }

 private:
  std::optional<std::string> take(const std::string& key) {
    used_[key] = true;
    const auto it = kv_.values().find(key);
    if (it == kv_.values().end()) return std::nullopt;
    return it->second;
  }

  const KeyValues& kv_;
  std::map<std::string, bool> used_;
};

}  // namespace internal

/// Defaults overlaid with the given keys. Unknown keys and bad values throw
/// InvalidArgument naming the key.
inline RunConfig resolve(const KeyValues& kv) {
  RunConfig c;
  internal::Reader r(kv);
  r.positive("source.wavelength", c.wavelength);
  r.positive("source.regions", c.regions);
  r.positive("source.distance_over_lambda", c.distance_over_lambda);
  r.positive("source.power", c.power);
  r.positive("source.exposure", c.exposure);
  r.integer("grid.width", c.width, 1);
  r.integer("grid.height", c.height, 1);
  r.positive("grid.pixels_per_M", c.pixels_per_M);
  r.positive("gabor.w_over_M", c.w_over_M);
  r.positive("gabor.wk", c.wk);
  r.number("gabor.psi1", c.psi1);
  r.positive("gabor.ell_over_w", c.ell_over_w);
  r.integer("ensemble.trials", c.trials, 2);
  r.seed("ensemble.seed", c.seed);
  r.list("ensemble.q", c.q);
  r.list("ensemble.T", c.T);
  r.integer("ensemble.threads", c.threads, 0);
  r.list("scan.w_over_M", c.scan.w_over_M);
  r.list("scan.wk", c.scan.wk);
  r.positive("scan.tolerance", c.scan.tolerance);
  r.integer("scan.max_side", c.scan.max_side, 16);
  r.positive("noise.N_I", c.N_I);
  r.positive("noise.pixel_area", c.pixel_area);
  r.number("noise.pedestal_sigmas", c.pedestal_sigmas);
  r.list("noise.mi_snr", c.mi_snr);
  r.integer("drift.sequences", c.drift.sequences, 2);
  r.integer("drift.images", c.drift.images, 2);
  r.number("drift.q_step", c.drift.q_step);
  r.positive("drift.gain", c.drift.gain);
  r.number("drift.noise_sd", c.drift.noise_sd);
  r.positive("drift.w_over_M", c.drift.w_over_M);
  r.positive("drift.wk", c.drift.wk);
  r.positive("theory.L", c.L);
  r.positive("theory.M", c.M);
  r.positive("theory.ell", c.ell);
  r.positive("theory.t", c.t);
  r.number("theory.snr", c.snr);
  r.number("theory.c1", c.c1);
  r.positive("theory.c2", c.c2);
  r.list("theory.fig5_w", c.fig5_w);
  r.positive("theory.fig5_M", c.fig5_M);
  r.integer("theory.points", c.points, 2);
  r.text("output.dir", c.output_dir);
  r.reject_unknown();

  auto in_range = [](const std::string& key, const std::vector<double>& v, double lo, double hi) {
    for (double x : v)
      if (x < lo || x > hi) throw InvalidArgument("config key " + key + ": value " + format_number(x) + " out of range");
  };
  in_range("ensemble.q", c.q, 0.0, std::numbers::pi);
  in_range("ensemble.T", c.T, 0.0, INFINITY);
  if (c.drift.q_step < 0.0 || c.drift.q_step > std::numbers::pi) throw InvalidArgument("config key drift.q_step: must lie in [0, pi]");
  if (c.drift.noise_sd < 0.0) throw InvalidArgument("config key drift.noise_sd: must be >= 0");
  if (c.snr < 0.0) throw InvalidArgument("config key theory.snr: must be >= 0");
  if (c.c1 < 0.0) throw InvalidArgument("config key theory.c1: must be >= 0");
  if (!(c.ell < c.L)) throw InvalidArgument("config key theory.ell: must be < theory.L");
  return c;
}

}  // namespace speckle::config
