#include <openssl/evp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "speckle/speckle.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace speckle;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr const char* kOutputEnv = "SPECKLE_OUTPUT_ROOT";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char b[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(b, sizeof b, "%02x", md[i]);
    hex += b;
  }
  return hex;
}

/// Output directory for one subcommand plus the list of files written there.
class Outputs {
 public:
  Outputs(const fs::path& root, const std::string& command) : dir_(root / command), command_(command) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  const fs::path& dir() const { return dir_; }

  fs::path path(const std::string& rel) {
    const auto p = dir_ / rel;
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + p.parent_path().string());
    files_.push_back(rel);
    return p;
  }

  template <class Fn>
  void write(const std::string& rel, Fn&& fn) {
    const auto p = path(rel);
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    fn(out);
    if (!out) throw IoError("write failed for " + p.string());
  }

  /// manifest.json with the SHA-256 of every artifact.
  void finish(const json& metadata) {
    json m;
    m["command"] = command_;
    m["metadata"] = metadata;
    m["artifacts"] = json::array();
    for (const auto& rel : files_) {
      const auto p = dir_ / rel;
      m["artifacts"].push_back({{"path", rel}, {"bytes", fs::file_size(p)}, {"sha256", sha256_file(p)}});
    }
    std::ofstream out(dir_ / "manifest.json");
    if (!out) throw IoError("cannot write " + (dir_ / "manifest.json").string());
    out << m.dump(2) << "\n";
  }

 private:
  fs::path dir_;
  std::string command_;
  std::vector<std::string> files_;
};

struct Common {
  std::string config_file;
  std::string output;
  int threads = -1;
  std::vector<std::string> overrides;
};

config::RunConfig resolve_config(const Common& c) {
  config::KeyValues kv;
  if (!c.config_file.empty()) kv = config::KeyValues::load(c.config_file);
  if (const char* env = std::getenv(kOutputEnv); env && *env) kv.set("output.dir", env);
  for (const auto& o : c.overrides) kv.apply_override(o);
  if (!c.output.empty()) kv.set("output.dir", c.output);
  if (c.threads >= 0) kv.set("ensemble.threads", std::to_string(c.threads));
  auto rc = config::resolve(kv);
  parallel::set_max_threads(rc.threads);
  return rc;
}

Outputs start(const config::RunConfig& rc, const std::string& command) {
  Outputs out(rc.output_dir, command);
  out.write("config.ini", [&](std::ostream& o) { o << rc.snapshot(); });
  return out;
}

std::string q_label(double q) {
  std::ostringstream s;
  s << "q_" << std::setprecision(6) << q;
  return s.str();
}

std::string t_label(double t) {
  std::ostringstream s;
  s << "T_" << std::setprecision(6) << t;
  return s.str();
}

double coefficient_rms(const gabor::GaborMap& m) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& c : m.coefficients)
    for (double g : c) {
      s += g * g;
      ++n;
    }
  return std::sqrt(s / static_cast<double>(n));
}

int cmd_simulate(const config::RunConfig& rc, bool q_sweep) {
  const auto cfg = rc.ensemble();
  auto out = start(rc, "simulate");
  const auto source = new_source(cfg.geometry, cfg.base_seed);
  const auto I = render_intensity(source, cfg.grid);
  const auto G = gabor::gabor_map(I, cfg.gabor);
  const double sigma = coefficient_rms(G);
  json meta{{"seed", cfg.base_seed},
            {"regions", cfg.geometry.region_count()},
            {"M_pixels", cfg.M_pixels()},
            {"gabor", {{"w", cfg.gabor.w}, {"k", cfg.gabor.k_mag}, {"psi1", cfg.gabor.psi1}, {"ell", cfg.gabor.ell}}},
            {"sigma_G_hat", sigma},
            {"T_units", "sigma_G_hat of the enrolled map"}};

  auto emit = [&](const std::string& dir, const IntensityMap& map, const gabor::GaborMap& gm) {
    save_intensity(out.path(dir + "/intensity.spk"), map, geometry_fields(cfg.geometry));
    export_pgm(out.path(dir + "/intensity.pgm"), map);
    out.write(dir + "/gabor.csv", [&](std::ostream& o) { gabor::write_gabor_csv(o, gm); });
  };
  emit("enrolled", I, G);
  std::vector<gabor::RobustBitstring> enrolled;
  for (double t : cfg.T_list) {
    enrolled.push_back(gabor::binarize(G, t * sigma));
    gabor::save_bitstring(out.path("enrolled/bits_" + t_label(t) + ".bin"), enrolled.back());
  }

  if (q_sweep) {
    std::ostringstream summary;
    summary << "q,Q,T_over_sigma,errors,robust,rate\r\n" << std::setprecision(17);
    for (std::size_t i = 0; i < cfg.q_list.size(); ++i) {
      const double q = cfg.q_list[i];
      const PerturbationSpec spec{q, rng::key(cfg.base_seed, rng::Stream::Perturbation, static_cast<std::int64_t>(i))};
      const auto Ip = render_intensity(perturb(source, spec), cfg.grid);
      const auto Gp = gabor::gabor_map(Ip, cfg.gabor);
      const std::string dir = q_label(q);
      emit(dir, Ip, Gp);
      for (std::size_t j = 0; j < cfg.T_list.size(); ++j) {
        const double t = cfg.T_list[j];
        gabor::save_bitstring(out.path(dir + "/bits_" + t_label(t) + ".bin"), gabor::binarize(Gp, t * sigma));
        summary << q << ',' << theory::PerturbationFactor::from_q(q).Q << ',' << t << ',';
        if (enrolled[j].robust_count() == 0) {
          summary << "0,0,nan\r\n";
          continue;
        }
        const auto e = gabor::bit_error_rate(enrolled[j], Gp);
        summary << e.errors << ',' << e.robust << ',' << e.rate << "\r\n";
      }
    }
    out.write("bit_errors.csv", [&](std::ostream& o) { o << summary.str(); });
  }
  out.finish(meta);
  std::cout << "wrote " << out.dir().string() << "\n";
  return kExitOk;
}

int cmd_theory(const config::RunConfig& rc, const std::string& figure) {
  const auto curve = theory::theory_curve(figure, rc.curves());
  auto out = start(rc, "theory");
  out.write(figure + ".csv", [&](std::ostream& o) { theory::write_curve_csv(o, curve); });
  json meta{{"figure", figure}, {"rows", curve.rows.size()}};
  if (figure == "fig1" || figure == "fig3") meta["normalisation"] = "per speckle area pi M^2 with speckle radius M (arbitrary)";
  out.finish(meta);
  std::cout << "wrote " << (out.dir() / (figure + ".csv")).string() << "\n";
  return kExitOk;
}

int cmd_validate(const config::RunConfig& rc, const std::string& suite, bool inject) {
  const auto which = mc::parse_suite(suite);
  const auto cfg = rc.ensemble();
  auto reports = mc::run_suites(which, cfg, rc.noise(), rc.drift);
  if (inject) {
    for (auto& r : reports)
      if (mc::inject_failure(r)) break;
  }
  auto out = start(rc, "validate");
  bool ok = true;
  json summary = json::array();
  for (const auto& r : reports) {
    ok = ok && r.passed();
    out.write("report_" + r.suite + ".csv", [&](std::ostream& o) { mc::write_report_csv(o, r); });
    out.write("report_" + r.suite + ".json", [&](std::ostream& o) { o << mc::report_to_json(r).dump(2) << "\n"; });
    for (const auto& t : r.tables)
      out.write(r.suite + "_" + t.name + ".csv", [&](std::ostream& o) { mc::write_table_csv(o, t); });
    for (const auto& row : r.rows) {
      if (row.pass) continue;
      std::cout << "FAIL " << r.suite << " " << row.quantity << " empirical=" << row.empirical.value
                << " theory=" << row.theoretical << " z=" << row.z_score << "\n";
    }
    std::cout << r.suite << ": " << (r.rows.size() - r.failures()) << "/" << r.rows.size() << " rows pass\n";
    summary.push_back({{"suite", r.suite}, {"rows", r.rows.size()}, {"failures", r.failures()}});
  }
  out.finish({{"suite", suite}, {"passed", ok}, {"reports", summary}, {"injected_failure", inject}});
  return ok ? kExitOk : kExitValidation;
}

struct AnalyzeOptions {
  std::vector<std::string> paths;
  double w = 0.0;
  double k = 0.0;
  double psi1 = 0.0;
  double ell = 0.0;
  int bin_width = 4;
  bool exclude_saturated = false;
  bool floor = false;
};

int cmd_analyze(const config::RunConfig& rc, const AnalyzeOptions& a) {
  std::vector<GrayImage> images;
  for (const auto& p : a.paths) {
    if (!fs::exists(p)) throw IoError("no such file: " + p);
    auto img = load_pgm(p);
    images.push_back(a.floor ? ingest::normalize_floor(img) : std::move(img));
  }
  auto out = start(rc, "analyze-images");
  json meta{{"images", a.paths},
            {"gray_to_intensity", "linear"},
            {"floor_subtracted", a.floor},
            {"exclude_saturated", a.exclude_saturated},
            {"gabor", {{"w", a.w}, {"k", a.k}, {"psi1", a.psi1}}}};
  json per_image = json::array();
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto h = ingest::gray_histogram(images[i], a.bin_width, a.exclude_saturated);
    const std::string name = "histogram_" + std::to_string(i) + "_" + fs::path(a.paths[i]).stem().string() + ".csv";
    out.write(name, [&](std::ostream& o) { ingest::write_histogram_csv(o, h); });
    per_image.push_back({{"path", a.paths[i]},
                         {"mean", h.mean},
                         {"saturated", ingest::saturated_count(images[i])},
                         {"ks_exponential", ingest::histogram_ks(images[i], a.exclude_saturated)}});
  }
  meta["per_image"] = per_image;
  if (images.size() >= 2) {
    const double ell = a.ell > 0.0 ? a.ell : std::max(1.0, std::ceil(0.5 * a.w));
    meta["gabor"]["ell"] = ell;
    const auto grid = gabor::GaborGrid::create(a.w, a.k, a.psi1, ell, images[0].width, images[0].height);
    const auto r = ingest::drift_analysis(ingest::DriftSequence::create(std::move(images)), grid, rc.threads);
    out.write("scatter.csv", [&](std::ostream& o) { ingest::write_scatter_csv(o, r); });
    meta["regression"] = {{"slope", r.fit.slope}, {"intercept", r.fit.intercept}, {"slope_se", r.fit.slope_se}, {"pairs", r.pairs.size()}};
  }
  out.finish(meta);
  std::cout << "wrote " << out.dir().string() << "\n";
  return kExitOk;
}

/// Splits "--section.key=value" overrides from the arguments CLI11 should see.
std::vector<std::string> split_overrides(int argc, char** argv, std::vector<std::string>& overrides) {
  std::vector<std::string> rest;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    const auto eq = a.find('=');
    const auto dot = a.find('.');
    if (a.rfind("--", 0) == 0 && eq != std::string::npos && dot != std::string::npos && dot < eq) {
      overrides.push_back(a.substr(2));
    } else {
      rest.push_back(a);
    }
  }
  return rest;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speckle pattern simulation, theory curves, validation suites and image analysis.\n"
               "Any --section.key=value argument overrides the config file."};
  app.name("speckle");
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.config_file, "key=value config file");
    sub->add_option("-o,--output", common.output, std::string("output root (default from ") + kOutputEnv + " or output.dir)");
    sub->add_option("--threads", common.threads, "worker cap, 0 = auto")->check(CLI::NonNegativeNumber);
  };

  bool q_sweep = false;
  auto* sim = app.add_subcommand("simulate", "render a source, its Gabor map and bitstrings");
  add_common(sim);
  sim->add_flag("--q-sweep", q_sweep, "one perturbed artifact set per ensemble.q value");

  std::string figure;
  auto* th = app.add_subcommand("theory", "emit theory curves as CSV");
  add_common(th);
  th->add_option("figure", figure, "fig1 | fig3 | fig4 | fig5 | custom")
      ->required()
      ->check(CLI::IsMember({"fig1", "fig3", "fig4", "fig5", "custom"}));

  std::string suite;
  bool inject = false;
  auto* val = app.add_subcommand("validate", "run Monte Carlo suites against theory");
  add_common(val);
  val->add_option("suite", suite, "intensity | gabor | perturbation | mi | drift | all")
      ->required()
      ->check(CLI::IsMember({"intensity", "gabor", "perturbation", "mi", "drift", "all"}));
  val->add_flag("--inject-failure", inject, "shift one theory value by 10 standard errors");

  AnalyzeOptions an;
  auto* ana = app.add_subcommand("analyze-images", "histograms and drift scatter of PGM captures");
  add_common(ana);
  ana->add_option("images", an.paths, "PGM files")->required();
  ana->add_option("--w", an.w, "Gabor width, pixels")->required()->check(CLI::PositiveNumber);
  ana->add_option("--k", an.k, "Gabor wave number, rad/pixel")->required()->check(CLI::PositiveNumber);
  ana->add_option("--psi1", an.psi1, "first Gabor direction, rad");
  ana->add_option("--ell", an.ell, "lattice pitch, pixels (default ceil(w/2))");
  ana->add_option("--bin-width", an.bin_width, "histogram bin width, gray levels")->check(CLI::PositiveNumber);
  ana->add_flag("--exclude-saturated", an.exclude_saturated, "drop 255 pixels from the histogram");
  ana->add_flag("--subtract-floor", an.floor, "subtract each image's minimum");

  std::vector<std::string> args = split_overrides(argc, argv, common.overrides);
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    const auto rc = resolve_config(common);
    if (sim->parsed()) return cmd_simulate(rc, q_sweep);
    if (th->parsed()) return cmd_theory(rc, figure);
    if (val->parsed()) return cmd_validate(rc, suite, inject);
    if (ana->parsed()) return cmd_analyze(rc, an);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}
