#pragma once

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "speckle/theory/bit_error.hpp"
#include "speckle/theory/gabor_stats.hpp"
#include "speckle/theory/information.hpp"
#include "speckle/theory/perturbation.hpp"

namespace speckle::theory {

/// Columns named after the operation that produced them.
struct Curve {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::vector<double> column(std::size_t c) const {
    std::vector<double> out;
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
  }
};

inline void write_curve_csv(std::ostream& out, const Curve& c) {
  for (std::size_t i = 0; i < c.columns.size(); ++i) out << (i ? "," : "") << c.columns[i];
  out << "\r\n" << std::setprecision(17);
  for (const auto& r : c.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
    out << "\r\n";
  }
}

/// Settings shared by the curves; lengths in pixels.
struct CurveParams {
  double L = 800.0;
  double M = 3.0;
  double ell = 5.0;
  double t = 1.0;
  /// I_av / N_I for the perturbed-MI curve.
  double snr = 10.0;
  int points = 50;
  std::vector<double> T_over_sigma{0.0, 1.0, 2.0};
  std::vector<double> fig5_w{5.0, 10.0, 15.0, 20.0};
  double fig5_M = 5.0;
  /// Raw constants for the custom curve.
  double c1 = 0.0;
  double c2 = 1.0;
};

namespace internal {

inline std::vector<double> q_grid(int n) {
  detail::require(n >= 2, "a curve needs at least 2 points");
  std::vector<double> q;
  for (int i = 0; i < n; ++i) q.push_back(std::numbers::pi * i / (n - 1));
  return q;
}

inline std::string fmt_param(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

}  // namespace internal

/// MI per speckle area against I_av / N_I, log-spaced over 10^-3 .. 10^3.
inline Curve detector_mi_curve(const CurveParams& p) {
  Curve c{"fig1",
          {"Iav_over_NI", "y", "mi_detector_exact_sum_bits", "mi_detector_dilog_bits", "mi_detector_large_snr_bits",
           "mi_detector_small_snr_bits"},
          {}};
  for (int i = 0; i < p.points; ++i) {
    const double snr = std::pow(10.0, -3.0 + 6.0 * i / (p.points - 1));
    const auto m = MIParams::from_physical(p.L, p.ell, p.M, snr, p.t, kDefaultSigma, true);
    c.rows.push_back({snr, m.y(), mi_detector(m, MIMethod::ExactSum).bits, mi_detector(m, MIMethod::Dilog).bits,
                      mi_detector(m, MIMethod::LargeSnr).bits, mi_detector(m, MIMethod::SmallSnr).bits});
  }
  return c;
}

/// MI per speckle area between noiseless and perturbed noisy coefficients against q.
inline Curve perturbed_mi_curve(const CurveParams& p) {
  Curve c{"fig3", {"q", "Q", "mi_perturbed_dilog_bits", "mi_perturbed_determinant_bits"}, {}};
  const auto m = MIParams::from_physical(p.L, p.ell, p.M, p.snr, p.t, kDefaultSigma, true);
  for (double q : internal::q_grid(p.points)) {
    const auto Q = PerturbationFactor::from_q(q);
    c.rows.push_back({q, Q.Q, mi_perturbed(m, Q, PerturbedMIMethod::Dilog).bits,
                      mi_perturbed(m, Q, PerturbedMIMethod::Determinant).bits});
  }
  return c;
}

/// Bit error probability against q, one column per T / sigma_G.
inline Curve bit_error_curve(const CurveParams& p) {
  Curve c{"fig4", {"q", "Q"}, {}};
  for (double T : p.T_over_sigma) c.columns.push_back("bit_error_probability_T=" + internal::fmt_param(T));
  for (double q : internal::q_grid(p.points)) {
    const auto Q = PerturbationFactor::from_q(q);
    std::vector<double> row{q, Q.Q};
    for (double T : p.T_over_sigma) row.push_back(bit_error_probability(T, Q, BitErrorMethod::Quadrature).probability);
    c.rows.push_back(std::move(row));
  }
  return c;
}

/// sigma_G / I_av against k (rad/pixel), one closed-form and one exact-kernel column per w.
inline Curve sigma_curve(const CurveParams& p) {
  Curve c{"fig5", {"k"}, {}};
  for (double w : p.fig5_w) {
    c.columns.push_back("sigma_G_w=" + internal::fmt_param(w));
    c.columns.push_back("sigma_G_bessel_w=" + internal::fmt_param(w));
  }
  for (int i = 0; i < p.points; ++i) {
    const double k = 1.0 * (i + 1) / p.points;
    std::vector<double> row{k};
    for (double w : p.fig5_w) {
      const auto s = GaborStatParams::create(w, k, p.fig5_M);
      row.push_back(std::sqrt(sigma_G_sq(s)));
      row.push_back(std::sqrt(sigma_G_sq_bessel(s)));
    }
    c.rows.push_back(std::move(row));
  }
  return c;
}

/// Raw (c1, c2) over the full L^2 area, against q.
inline Curve custom_mi_curve(const CurveParams& p) {
  Curve c{"custom", {"q", "Q", "mi_detector_exact_sum_bits", "mi_perturbed_dilog_bits"}, {}};
  MIParams m{p.L, p.ell, p.c1, p.c2, false, 0.0};
  m.validate();
  const double base = mi_detector(m, MIMethod::ExactSum).bits;
  for (double q : internal::q_grid(p.points)) {
    const auto Q = PerturbationFactor::from_q(q);
    c.rows.push_back({q, Q.Q, base, mi_perturbed(m, Q, PerturbedMIMethod::Dilog).bits});
  }
  return c;
}

inline Curve theory_curve(const std::string& figure, const CurveParams& p) {
  if (figure == "fig1") return detector_mi_curve(p);
  if (figure == "fig3") return perturbed_mi_curve(p);
  if (figure == "fig4") return bit_error_curve(p);
  if (figure == "fig5") return sigma_curve(p);
  if (figure == "custom") return custom_mi_curve(p);
  throw InvalidArgument("unknown figure '" + figure + "' (expected fig1, fig3, fig4, fig5 or custom)");
}

}  // namespace speckle::theory
