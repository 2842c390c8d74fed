// One PASS/FAIL line per acceptance criterion. Exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "speckle/speckle.hpp"

using namespace speckle;
using namespace speckle::mc;

namespace {

constexpr std::uint64_t kSeed = 20261018;

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (ok) return;
    pass = false;
    detail += (detail.empty() ? "" : "; ") + what;
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

bool starts_with(const std::string& s, const std::string& p) { return s.rfind(p, 0) == 0; }

void rows_pass(Verdict& v, const ComparisonReport& r, const std::function<bool(const ComparisonRow&)>& pick,
               std::size_t expected) {
  std::size_t seen = 0;
  for (const auto& row : r.rows) {
    if (!pick(row)) continue;
    ++seen;
    v.require(row.pass, row.quantity + fmt(" = %.5g vs %.5g (z=%.2f)", row.empirical.value, row.theoretical, row.z_score));
  }
  v.require(seen == expected, fmt("expected %.0f rows, found %.0f", static_cast<double>(expected), static_cast<double>(seen)));
}

EnsembleConfig on_grid(EnsembleConfig c, int side) {
  c.grid = DetectorGrid::create(side, side, c.grid.pixel_pitch);
  c.gabor = gabor::GaborGrid::create(c.gabor.w, c.gabor.k_mag, c.gabor.psi1, c.gabor.ell, side, side);
  return c;
}

Verdict criterion_1(const ComparisonReport& r, const EnsembleConfig& cfg) {
  Verdict v;
  const auto* ks = r.find("ks_distance_exponential");
  const auto* var = r.find("var_I_over_Iav2_within_5pct");
  v.require(ks && ks->pass, "KS distance not below 0.01");
  v.require(var && var->pass, "Var(I)/I_av^2 outside 1 +- 5%");
  // KS samples every second pixel in each direction.
  const double px = static_cast<double>(cfg.trials) * (cfg.grid.width / 2) * (cfg.grid.height / 2);
  const double n_eff = effective_pixels(px, 4.0, cfg.M_pixels());
  v.require(n_eff >= 1e5, "fewer than 1e5 effective samples");
  if (ks && var)
    v.note(fmt("KS=%.4f, Var/I_av^2=%.4f, n_eff=%.3g", ks->empirical.value, var->empirical.value, n_eff));
  return v;
}

Verdict criterion_2(const ComparisonReport& r) {
  Verdict v;
  rows_pass(v, r, [](const ComparisonRow& row) { return starts_with(row.quantity, "C_I("); }, 4);
  for (const auto& row : r.rows)
    if (starts_with(row.quantity, "C_I(")) v.note(row.quantity + fmt(" z=%.2f", row.z_score));
  return v;
}

Verdict criterion_3(const ComparisonReport& r, double tolerance) {
  Verdict v;
  const auto* t = r.table("sigma_scan");
  v.require(t && !t->rows.empty(), "no sigma scan");
  if (!t) return v;
  double worst = 0.0;
  for (const auto& row : t->rows) {
    // w_over_M, wk, sigma_mc, sigma_se, sigma_closed_form, sigma_exact_kernel
    const double rel = row[2] / row[4] - 1.0;
    worst = std::max(worst, std::abs(rel));
    v.require(std::abs(rel) <= tolerance, fmt("w/M=%.2g wk=%.2g off by %+.1f%%", row[0], row[1], 100.0 * rel));
  }
  v.note(fmt("%.0f (w, k) points, worst deviation %.1f%%", static_cast<double>(t->rows.size()), 100.0 * worst));
  return v;
}

Verdict criterion_4(const ComparisonReport& r) {
  Verdict v;
  const auto* skew = r.find("skewness_G");
  const auto* gauss = r.find("oracle_gaussian_part_over_3m2sq(N_reg=12)");
  const auto* ident = r.find("small_w_kurtosis_ratio_identity");
  const auto* brute = r.find("oracle_small_w_kurtosis_ratio(N_reg=37)");
  v.require(skew && std::abs(skew->z_score) <= kZPass, "skewness |z| > 3");
  v.require(gauss && gauss->pass, "Gaussian part of <G^4> not reproduced to 1e-10");
  v.require(ident && ident->pass, "1 + 1/64 identity not reproduced");
  if (skew && gauss && ident) {
    v.note(fmt("skewness z=%.2f, Gaussian part ratio-1=%.2g", skew->z_score, gauss->empirical.value - 1.0));
    v.note(fmt("identity=%.15g", ident->empirical.value));
  }
  if (brute) v.note(fmt("brute-force ratio on 37 regions %.4f (info)", brute->empirical.value));
  return v;
}

Verdict criterion_5(const ComparisonReport& r) {
  Verdict v;
  rows_pass(v, r, [](const ComparisonRow& row) {
    return (starts_with(row.quantity, "Xi_I(") || starts_with(row.quantity, "Xi_G(")) && row.quantity.find("q=0)") == std::string::npos;
  }, 8);
  for (const auto& row : r.rows)
    if (starts_with(row.quantity, "Xi_") && row.quantity.find("q=0)") == std::string::npos)
      v.note(row.quantity + fmt(" z=%.2f", row.z_score));
  return v;
}

Verdict criterion_6(const ComparisonReport& r) {
  Verdict v;
  rows_pass(v, r, [](const ComparisonRow& row) {
    if (!starts_with(row.quantity, "flip_rate(") || row.quantity.find("_vs_arccos") != std::string::npos) return false;
    return row.quantity.find("q=0,") == std::string::npos && row.quantity.find("q=3.142") == std::string::npos;
  }, 9);
  double worst = 0.0;
  for (const auto& row : r.rows)
    if (starts_with(row.quantity, "flip_rate(") && row.check == Check::ZScore) worst = std::max(worst, std::abs(row.z_score));
  v.note(fmt("largest flip |z| %.2f", worst));

  double t0 = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const auto Q = theory::PerturbationFactor::from_q(std::numbers::pi * i / 100.0);
    const double quad = theory::bit_error_probability(0.0, Q, theory::BitErrorMethod::Quadrature).probability;
    t0 = std::max(t0, std::abs(quad - std::acos(Q.Q) / std::numbers::pi));
  }
  v.require(t0 <= 1e-8, fmt("T=0 quadrature off arccos law by %.2g", t0));
  v.note(fmt("T=0 law max gap %.2g", t0));

  std::size_t weak_n = 0, strong_n = 0;
  for (double t : {1.0, 2.0, 3.0})
    for (double eps : {0.05, 0.1, 0.15, 0.19}) {
      const double x = eps * t / std::numbers::sqrt2;
      const auto Q = theory::PerturbationFactor::from_Q(1.0 / std::sqrt(1.0 + x * x));
      const auto w = theory::bit_error_probability(t, Q, theory::BitErrorMethod::Weak);
      if (!w.in_regime) continue;
      ++weak_n;
      const double quad = theory::bit_error_probability(t, Q, theory::BitErrorMethod::Quadrature).probability;
      v.require(std::abs(w.probability - quad) < w.next_order_term, fmt("weak expansion t=%.1f eps=%.2f", t, eps));
    }
  for (double t : {0.0, 0.3, 0.5, 1.0})
    for (double q : {2.5, 2.8, 3.0, 3.1}) {
      const auto Q = theory::PerturbationFactor::from_q(q);
      const auto s = theory::bit_error_probability(t, Q, theory::BitErrorMethod::Strong);
      if (!s.in_regime) continue;
      ++strong_n;
      const double quad = theory::bit_error_probability(t, Q, theory::BitErrorMethod::Quadrature).probability;
      v.require(std::abs(s.probability - quad) < s.next_order_term + 1e-14, fmt("strong expansion t=%.1f q=%.2f", t, q));
    }
  v.require(weak_n >= 6 && strong_n >= 4, "too few points inside the expansion regimes");
  v.note(fmt("expansions checked at %.0f weak and %.0f strong points", static_cast<double>(weak_n), static_cast<double>(strong_n)));
  return v;
}

Verdict criterion_7() {
  using namespace theory;
  Verdict v;
  std::size_t n = 0;
  double worst = 0.0;
  for (int i = 0; i <= 70; ++i) {
    const double snr = std::pow(10.0, -3.0 + 0.1 * i);
    const auto p = MIParams::from_physical(800.0, 5.0, 3.0, snr, 1.0, kDefaultSigma, true);
    if (!(p.y() > 10.0 || p.y() < 0.1)) continue;
    ++n;
    const double exact = mi_detector(p, MIMethod::ExactSum).nats;
    const double dilog = mi_detector(p, MIMethod::Dilog).nats;
    const double rel = std::abs(exact / dilog - 1.0);
    worst = std::max(worst, rel);
    v.require(rel <= 0.02, fmt("exact sum vs dilog %.1f%% at I_av/N_I=%.3g", 100.0 * rel, snr));
  }
  v.note(fmt("exact sum vs dilog worst %.2f%% over %.0f points", 100.0 * worst, static_cast<double>(n)));

  for (double snr : {1e2, 1e4, 1e6}) {
    const auto p = MIParams::from_physical(800.0, 5.0, 3.0, snr);
    const auto lim = mi_detector(p, MIMethod::LargeSnr);
    const double rel = std::abs(lim.nats / mi_detector(p, MIMethod::Dilog).nats - 1.0);
    v.require(lim.in_regime && rel <= 0.05, fmt("large-SNR limit %.1f%% off at %.3g", 100.0 * rel, snr));
  }
  // The small-SNR regime (y << 1 with c1 >> 1) is empty at L=800, M=3, ell=5; use ell=2.
  const auto ps = MIParams::from_physical(800.0, 2.0, 3.0, 20.0);
  const auto small = mi_detector(ps, MIMethod::SmallSnr);
  const double rel_s = std::abs(small.nats / mi_detector(ps, MIMethod::Dilog).nats - 1.0);
  v.require(small.in_regime && rel_s <= 0.05, fmt("small-SNR limit %.1f%% off", 100.0 * rel_s));
  v.note(fmt("small-SNR limit %.2f%% off at ell=2", 100.0 * rel_s));

  CurveParams cp;
  cp.points = 61;
  const auto c = detector_mi_curve(cp);
  const auto x = c.column(0);
  const auto mi = c.column(2);
  std::vector<double> d2(x.size(), 0.0);
  std::size_t peak = 1;
  for (std::size_t i = 1; i + 1 < x.size(); ++i) {
    d2[i] = mi[i + 1] - 2.0 * mi[i] + mi[i - 1];
    if (d2[i] > d2[peak]) peak = i;
  }
  bool shape = x[peak] > 0.1 && x[peak] < 10.0;
  for (std::size_t i = 2; i < peak; ++i) shape = shape && d2[i] > d2[i - 1];
  for (std::size_t i = peak + 1; i + 1 < x.size(); ++i) shape = shape && d2[i] < d2[i - 1];
  v.require(shape, "second difference does not turn near I_av/N_I = 1");
  v.note(fmt("curvature turns at I_av/N_I=%.2f", x[peak]));
  return v;
}

Verdict criterion_8() {
  using namespace theory;
  Verdict v;
  const auto p = MIParams::from_physical(800.0, 5.0, 3.0, 10.0, 1.0, kDefaultSigma, true);
  for (auto m : {PerturbedMIMethod::Dilog, PerturbedMIMethod::Determinant}) {
    const double full = mi_detector(p, m == PerturbedMIMethod::Dilog ? MIMethod::Dilog : MIMethod::ExactSum).nats;
    const double near0 = mi_perturbed(p, PerturbationFactor::from_q(1e-7), m).nats;
    v.require(std::abs(near0 - full) <= 1e-9 * full, fmt("q->0 limit off by %.2g relative", std::abs(near0 / full - 1.0)));
    v.require(mi_perturbed(p, PerturbationFactor::from_q(std::numbers::pi), m).nats == 0.0, "q=pi not zero");
    double prev = INFINITY;
    for (int i = 0; i < 50; ++i) {
      const double val = mi_perturbed(p, PerturbationFactor::from_q(std::numbers::pi * i / 49.0), m).nats;
      v.require(val < prev || (i == 0), fmt("not decreasing at grid point %.0f", i));
      prev = val;
    }
  }
  v.note(fmt("MI(q=0)=%.4g bits per speckle", mi_perturbed(p, PerturbationFactor::from_q(0.0), PerturbedMIMethod::Dilog).bits));
  return v;
}

Verdict criterion_9() {
  Verdict v;
  const auto g = SourceGeometry::create(780e-9, 0.5e-3, 0.1);
  const auto b = PhotonBudget::create(g, 1e-3, 1e-3);
  const double bits = entropy_bits_per_region(b);
  v.require(std::abs(bits - 14.0) <= 0.5, fmt("%.3f bits per region", bits));
  v.note(fmt("%.3g photons per region, %.3f bits per region", b.photons_per_region(), bits));
  return v;
}

Verdict criterion_10(const ComparisonReport& r) {
  Verdict v;
  rows_pass(v, r, [](const ComparisonRow& row) { return starts_with(row.quantity, "Sigma_N_"); }, 6);
  for (const auto& row : r.rows)
    if (starts_with(row.quantity, "Sigma_N_")) v.note(row.quantity + fmt(" z=%.2f", row.z_score));
  return v;
}

Verdict criterion_11(const ComparisonReport& r) {
  Verdict v;
  const auto* slope = r.find("slope_Xi_G_on_Xi_I(noiseless)");
  const auto* above = r.find("fraction_above_line(noisy)");
  const auto* gap = r.find("mean_Xi_G_minus_Xi_I(noisy)");
  v.require(slope && slope->pass, "noiseless slope outside 1 +- 0.05");
  v.require(above && above->pass, "noisy pairs not above the line");
  v.require(gap && gap->empirical.value > 0.0, "no positive gap with noise");
  if (slope && above && gap)
    v.note(fmt("slope %.4f +- %.4f", slope->empirical.value, slope->empirical.std_error) +
           fmt("; with noise %.0f%% of pairs above the line, mean gap %.3f", 100.0 * above->empirical.value,
               gap->empirical.value));
  return v;
}

bool same_report(const ComparisonReport& a, const ComparisonReport& b) {
  if (a.rows.size() != b.rows.size() || a.tables.size() != b.tables.size()) return false;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    const auto &x = a.rows[i].empirical, &y = b.rows[i].empirical;
    if (a.rows[i].quantity != b.rows[i].quantity || x.value != y.value || x.std_error != y.std_error) {
      if (!(std::isnan(x.value) && std::isnan(y.value))) return false;
    }
  }
  for (std::size_t t = 0; t < a.tables.size(); ++t)
    if (a.tables[t].rows != b.tables[t].rows) return false;
  return true;
}

Verdict criterion_12() {
  Verdict v;
  auto c = desk_config(6, kSeed);
  c.grid = DetectorGrid::create(128, 128, c.grid.pixel_pitch);
  c.gabor = gabor::GaborGrid::create(8.0, 1.5 / 8.0, 0.0, 4.0, 128, 128);
  c.scan.w_over_M = {1.7};
  c.scan.wk = {1.0, 2.0};
  c.scan.max_side = 160;
  c.q_list = {0.0, 1.0, std::numbers::pi};
  c.T_list = {0.0, 1.0};
  DriftSuiteOptions d;
  d.sequences = 2;
  d.images = 4;
  std::size_t rows = 0;
  for (auto which : {SuiteName::Intensity, SuiteName::Gabor, SuiteName::Perturbation, SuiteName::Mi, SuiteName::Drift}) {
    std::vector<std::vector<ComparisonReport>> runs;
    for (unsigned threads : {1u, 2u, 4u}) {
      c.threads = threads;
      runs.push_back(run_suites(which, c, {}, d));
    }
    const auto& name = runs[0][0].suite;
    rows += runs[0][0].rows.size();
    v.require(same_report(runs[0][0], runs[1][0]) && same_report(runs[0][0], runs[2][0]),
              name + " differs across thread counts");
  }
  v.note(fmt("%.0f rows over 5 suites identical at 1, 2 and 4 threads", static_cast<double>(rows)));
  return v;
}

}  // namespace

int main() {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  int failures = 0;
  auto report = [&](int n, const std::string& title, const Verdict& v) {
    std::printf("criterion %2d %s  %s: %s\n", n, v.pass ? "PASS" : "FAIL", title.c_str(), v.detail.c_str());
    std::fflush(stdout);
    failures += v.pass ? 0 : 1;
  };

  const auto intensity_cfg = on_grid(desk_config(200, kSeed), 256);
  const auto intensity = run_intensity_suite(intensity_cfg);
  report(1, "intensity PDF", criterion_1(intensity, intensity_cfg));
  report(2, "intensity correlation", criterion_2(intensity));

  const auto gabor = run_gabor_suite(on_grid(desk_config(60, kSeed), 256));
  report(3, "sigma_G over the (w, k) scan", criterion_3(gabor, GaborScan{}.tolerance));
  report(4, "moments of G", criterion_4(gabor));

  auto pert_cfg = desk_config(150, kSeed);
  pert_cfg.q_list = {0.5, 1.0, 2.0, std::numbers::pi};
  pert_cfg.T_list = {0.0, 1.0, 2.0};
  const auto pert = run_perturbation_suite(pert_cfg);
  report(5, "perturbation correlation", criterion_5(pert));
  report(6, "bit errors", criterion_6(pert));

  report(7, "MI formulas", criterion_7());
  report(8, "perturbed MI", criterion_8());
  report(9, "source entropy", criterion_9());

  report(10, "noise covariance", criterion_10(run_mi_consistency(desk_config(60, kSeed), NoiseOptions{})));
  report(11, "simulated drift scatter", criterion_11(run_drift_suite(desk_config(2, kSeed), DriftSuiteOptions{})));
  report(12, "determinism across thread counts", criterion_12());

  const double secs = std::chrono::duration<double>(clock::now() - t0).count();
  std::printf("%d of 12 criteria pass (%.0f s)\n", 12 - failures, secs);
  return failures == 0 ? 0 : 1;
}
