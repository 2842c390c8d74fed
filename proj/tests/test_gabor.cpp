#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "speckle/core/propagation.hpp"
#include "speckle/core/source.hpp"
#include "speckle/gabor/correlation.hpp"
#include "speckle/gabor/gabor.hpp"
#include "speckle/gabor/gabor_io.hpp"
#include "speckle/theory/bit_error.hpp"
#include "speckle/theory/gabor_stats.hpp"
#include "speckle/theory/quadrature.hpp"

using namespace speckle;
using namespace speckle::gabor;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLambda = 780e-9;

IntensityMap image_from(int W, int H, auto&& f) {
  std::vector<double> v(static_cast<std::size_t>(W) * H);
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c) v[static_cast<std::size_t>(r) * W + c] = f(c, r);
  return IntensityMap(DetectorGrid::create(W, H, 1.0), std::move(v));
}

// Speckle source with M = 4 pixels on the detector grid.
struct Speckle {
  SourceGeometry geometry = SourceGeometry::create(kLambda, kLambda * std::sqrt(2000 / kPi), 8000 * kLambda);
  DetectorGrid grid(int side) const { return DetectorGrid::create(side, side, geometry.speckle_scale() / 4.0); }
};

struct Stats {
  double mean = 0.0, se = 0.0;
};

Stats stats(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  double s = 0.0, s2 = 0.0;
  for (double v : x) s += v;
  const double m = s / n;
  for (double v : x) s2 += (v - m) * (v - m);
  return {m, std::sqrt(s2 / (n - 1) / n)};
}

}  // namespace

TEST(GaborCoefficient, ConstantImageGivesZero) {
  const auto img = image_from(64, 64, [](int, int) { return 3.5; });
  for (double w : {2.0, 4.0, 7.0}) {
    const auto p = GaborParams::create(w, polar_vec(0.9, 0.4), {31.0, 32.3});
    EXPECT_LE(std::abs(gabor_coefficient(img, p)), 1e-6 * 3.5) << w;
  }
}

TEST(GaborCoefficient, SineImageMatchesCellIntegrals) {
  // I = 1 + sin(k (x - x0)) with k along x. Oracle: exact integral of Gamma_IM I over
  // the union of pixel cells the stencil covers, one separable cell at a time.
  const double w = 4.0, k = 0.7;
  const Vec2 x0{40.0, 40.0};
  const auto img = image_from(81, 81, [&](int c, int) { return 1.0 + std::sin(k * (c - x0.x)); });
  const double G = gabor_coefficient(img, GaborParams::create(w, {k, 0.0}, x0));

  auto gx_sin2 = [&](double u) { return std::sin(k * u) * (1.0 + std::sin(k * u)) * std::exp(-u * u / (2 * w * w)); };
  auto gy = [&](double v) { return std::exp(-v * v / (2 * w * w)); };
  using theory::integrate;
  double oracle = 0.0;
  const int reach = 17;
  std::vector<double> ix(2 * reach + 1), iy(2 * reach + 1);
  for (int d = -reach; d <= reach; ++d) {
    ix[d + reach] = integrate(gx_sin2, d - 0.5, d + 0.5, 1e-17).value;
    iy[d + reach] = integrate(gy, d - 0.5, d + 0.5, 1e-17).value;
  }
  for (int dy = -reach; dy <= reach; ++dy)
    for (int dx = -reach; dx <= reach; ++dx)
      if (dx * dx + dy * dy <= 16 * w * w) oracle += ix[dx + reach] * iy[dy + reach];
  oracle /= 2 * kPi * w * w;
  EXPECT_NEAR(G / oracle, 1.0, 1e-4);
  // Untruncated continuum value, within the envelope mass cut at 4w.
  EXPECT_NEAR(G, 0.5 * (1.0 - std::exp(-2.0 * w * w * k * k)), std::exp(-8.0));
}

TEST(GaborCoefficient, ReflectionThroughCenterNegates) {
  const Vec2 x0{30.0, 28.0};
  auto f = [](int c, int r) { return 1.0 + std::sin(0.3 * c + 0.01 * c * r) * std::cos(0.17 * r) + 0.001 * c; };
  const auto img = image_from(61, 57, f);
  const auto mirrored = image_from(61, 57, [&](int c, int r) { return f(60 - c, 56 - r); });
  const auto p = GaborParams::create(5.0, polar_vec(0.8, 1.1), x0);
  const double a = gabor_coefficient(img, p), b = gabor_coefficient(mirrored, p);
  EXPECT_NEAR(a, -b, 1e-13 * std::abs(a));
}

TEST(GaborCoefficient, Linearity) {
  const auto i1 = image_from(50, 50, [](int c, int r) { return std::abs(std::sin(0.2 * c * r)); });
  const auto i2 = image_from(50, 50, [](int c, int r) { return 1.0 + std::cos(0.5 * c - 0.3 * r); });
  const auto sum = image_from(50, 50, [&](int c, int r) { return 2.0 * i1.at(c, r) + 0.5 * i2.at(c, r); });
  const auto p = GaborParams::create(3.0, {0.6, 0.2}, {24.0, 25.0});
  const double expected = 2.0 * gabor_coefficient(i1, p) + 0.5 * gabor_coefficient(i2, p);
  EXPECT_NEAR(gabor_coefficient(sum, p), expected, 1e-14);
}

TEST(GaborCoefficient, RejectsClippedSupportAndBadParameters) {
  const auto img = image_from(40, 40, [](int, int) { return 1.0; });
  EXPECT_THROW(gabor_coefficient(img, GaborParams{5.0, {1.0, 0.0}, {10.0, 20.0}}), InvalidArgument);
  EXPECT_NO_THROW(gabor_coefficient(img, GaborParams{4.0, {1.0, 0.0}, {16.0, 20.0}}));
  EXPECT_THROW(GaborParams::create(0.0, {1.0, 0.0}, {}), InvalidArgument);
  EXPECT_THROW(GaborParams::create(2.0, {0.0, 0.0}, {}), InvalidArgument);
}

TEST(GaborGrid, LatticeKeepsMarginAndCenters) {
  const auto g = GaborGrid::create(3.0, 0.5, 0.2, 5.0, 100, 80);
  EXPECT_EQ(g.margin(), 12);
  EXPECT_EQ(g.count_x(), 16);  // span 75 -> 15 steps
  EXPECT_EQ(g.count_y(), 12);  // span 55 -> 11 steps
  const Vec2 first = g.center(0, 0), last = g.center(g.count_x() - 1, g.count_y() - 1);
  EXPECT_GE(first.x, 12.0);
  EXPECT_LE(last.x, 99.0 - 12.0);
  EXPECT_NEAR(norm(g.k(0)), 0.5, 1e-15);
  EXPECT_NEAR(dot(g.k(0), g.k(1)), 0.0, 1e-15);
  EXPECT_THROW(GaborGrid::create(10.0, 0.5, 0.0, 1.0, 60, 60), InvalidArgument);
  EXPECT_THROW(GaborGrid::create(2.0, 0.5, 0.0, 0.5, 60, 60), InvalidArgument);
}

TEST(GaborMap, SinglePointEqualsCoefficient) {
  const auto img = image_from(33, 33, [](int c, int r) { return 1.0 + 0.3 * std::sin(0.4 * c + 0.2 * r); });
  const auto g = GaborGrid::create(4.0, 0.8, 0.3, 30.0, 33, 33);
  ASSERT_EQ(g.points(), 1u);
  const auto m = gabor_map(img, g);
  for (int d = 0; d < 2; ++d) {
    ASSERT_EQ(m.coefficients[d].size(), 1u);
    EXPECT_EQ(m.coefficients[d][0], gabor_coefficient(img, GaborParams::create(4.0, g.k(d), g.center(0, 0))));
  }
}

TEST(GaborMap, EveryPointEqualsCoefficientAndThreadsAgree) {
  const auto img = image_from(70, 64, [](int c, int r) { return 2.0 + std::sin(0.37 * c) * std::cos(0.23 * r + 0.01 * c * c); });
  const auto g = GaborGrid::create(3.0, 1.1, 0.5, 3.0, 70, 64);
  const auto m1 = gabor_map(img, g, 1);
  const auto m3 = gabor_map(img, g, 3);
  for (int d = 0; d < 2; ++d) {
    EXPECT_EQ(m1.coefficients[d], m3.coefficients[d]);
    for (int iy = 0; iy < g.count_y(); iy += 3)
      for (int ix = 0; ix < g.count_x(); ix += 2)
        EXPECT_EQ(m1.at(d, ix, iy), gabor_coefficient(img, GaborParams::create(3.0, g.k(d), g.center(ix, iy))));
  }
  EXPECT_THROW(gabor_map(img, GaborGrid::create(3.0, 1.1, 0.5, 3.0, 64, 64)), InvalidArgument);
}

namespace {

GaborMap map_with(std::vector<double> d0, std::vector<double> d1) {
  const auto g = GaborGrid::create(1.0, 1.0, 0.0, 1.0, 9 + static_cast<int>(d0.size()) - 1, 9);
  GaborMap m{g, {std::move(d0), std::move(d1)}};
  EXPECT_EQ(m.coefficients[0].size(), g.points());
  return m;
}

}  // namespace

TEST(Binarize, DefinitionExample) {
  const double T = 1.5;
  const auto m = map_with({2 * T, -0.5 * T, -3 * T}, {0.0, T, -T * 1.01});
  const auto b = binarize(m, T);
  EXPECT_EQ(b.mask, (std::vector<std::uint8_t>{1, 0, 1, 0, 0, 1}));
  EXPECT_EQ(b.bits, (std::vector<std::uint8_t>{1, 0, 0, 0, 0, 0}));
  EXPECT_EQ(b.robust_count(), 3u);
}

TEST(Binarize, ThresholdLimitsAndMonotonicity) {
  const auto m = map_with({0.3, -0.1, 2.0, -4.0}, {1e-9, -1e-9, 0.7, -0.7});
  EXPECT_EQ(binarize(m, 0.0).robust_count(), 8u);
  EXPECT_EQ(binarize(m, std::numeric_limits<double>::infinity()).robust_count(), 0u);
  std::size_t prev = 8;
  for (double T : {0.0, 1e-9, 0.2, 0.5, 1.0, 3.0, 5.0}) {
    const auto b = binarize(m, T);
    EXPECT_LE(b.robust_count(), prev);
    prev = b.robust_count();
  }
  EXPECT_THROW(binarize(m, -1.0), InvalidArgument);
}

TEST(BitErrorRate, SelfNegatedAndErrors) {
  const auto m = map_with({0.3, -0.1, 2.0, -4.0}, {0.5, -0.6, 0.7, -0.8});
  auto neg = m;
  for (auto& c : neg.coefficients)
    for (double& v : c) v = -v;
  const auto b = binarize(m, 0.2);
  EXPECT_EQ(bit_error_rate(b, m).rate, 0.0);
  EXPECT_EQ(bit_error_rate(b, neg).rate, 1.0);
  EXPECT_EQ(bit_error_rate(b, neg).robust, 7u);
  EXPECT_THROW(bit_error_rate(binarize(m, 10.0), m), InvalidArgument);
  const auto other = map_with({1.0, 1.0, 1.0}, {1.0, 1.0, 1.0});
  EXPECT_THROW(bit_error_rate(b, other), InvalidArgument);
}

TEST(BitstringIo, RoundTripAndCorruption) {
  const auto m = map_with({0.3, -0.1, 2.0, -4.0, 0.0, 9.0, -2.0, 1.0, 0.5},
                          {0.5, -0.6, 0.7, -0.8, 3.0, -3.0, 0.1, 0.0, -0.25});
  const auto b = binarize(m, 0.2);
  std::stringstream s;
  write_bitstring(s, b);
  const auto r = read_bitstring(s);
  EXPECT_EQ(r.bits, b.bits);
  EXPECT_EQ(r.mask, b.mask);
  EXPECT_EQ(r.threshold, b.threshold);
  EXPECT_EQ(r.grid, b.grid);

  std::string data = [&] {
    std::stringstream t;
    write_bitstring(t, b);
    return t.str();
  }();
  std::stringstream truncated(data.substr(0, data.size() - 1));
  EXPECT_THROW(read_bitstring(truncated), FormatError);
  std::stringstream bad("SPECKLE-BITS 2\nend\n");
  EXPECT_THROW(read_bitstring(bad), FormatError);
}

TEST(GaborCsv, HeaderAndRowCount) {
  const auto m = map_with({1.0, 2.0}, {3.0, 4.0});
  std::stringstream s;
  write_gabor_csv(s, m);
  std::string line;
  std::getline(s, line);
  EXPECT_EQ(line, "x,y,direction,G\r");
  int rows = 0;
  while (std::getline(s, line)) ++rows;
  EXPECT_EQ(rows, 4);
}

TEST(Correlation, IdentityAffineAndDegenerate) {
  const auto a = image_from(20, 20, [](int c, int r) { return 1.0 + std::sin(0.3 * c * r); });
  const auto b = image_from(20, 20, [&](int c, int r) { return 3.0 * a.at(c, r) + 7.0; });
  const auto flat = image_from(20, 20, [](int, int) { return 2.0; });
  EXPECT_NEAR(empirical_correlation_intensity(a, a), 1.0, 1e-15);
  EXPECT_NEAR(empirical_correlation_intensity(a, b), 1.0, 1e-14);
  EXPECT_THROW(empirical_correlation_intensity(a, flat), InvalidArgument);

  const auto m = map_with({0.3, -0.1, 2.0}, {0.5, -0.6, 0.7});
  const auto c = empirical_correlation_gabor(m, m);
  EXPECT_NEAR(c.direction[0], 1.0, 1e-15);
  EXPECT_NEAR(c.direction[1], 1.0, 1e-15);
  EXPECT_NEAR(c.pooled, 1.0, 1e-15);
}

// ---- ensemble behaviour on rendered speckle ---------------------------------

TEST(GaborEnsemble, ZeroMeanAndIsotropicVariance) {
  const Speckle sp;
  const auto grid = sp.grid(128);
  const auto gg = GaborGrid::create(8.0, 1.5 / 8.0, 0.3, 8.0, 128, 128);
  std::vector<double> mean0, var0, var1;
  for (int t = 0; t < 60; ++t) {
    const auto img = render_intensity(new_source(sp.geometry, 500 + t), grid);
    const auto m = gabor_map(img, gg);
    double s = 0.0, v0 = 0.0, v1 = 0.0;
    for (std::size_t i = 0; i < gg.points(); ++i) {
      s += m.coefficients[0][i];
      v0 += m.coefficients[0][i] * m.coefficients[0][i];
      v1 += m.coefficients[1][i] * m.coefficients[1][i];
    }
    const double n = static_cast<double>(gg.points());
    mean0.push_back(s / n);
    var0.push_back(v0 / n);
    var1.push_back(v1 / n);
  }
  const auto m0 = stats(mean0);
  EXPECT_LT(std::abs(m0.mean), 3.0 * m0.se);
  std::vector<double> diff(var0.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = var0[i] - var1[i];
  const auto d = stats(diff);
  EXPECT_LT(std::abs(d.mean), 3.0 * d.se);
}

TEST(GaborEnsemble, PerturbedCorrelationsEqualQ) {
  const Speckle sp;
  const auto grid = sp.grid(128);
  const auto gg = GaborGrid::create(8.0, 1.5 / 8.0, 0.0, 4.0, 128, 128);
  for (double q : {0.8, 1.6}) {
    const double Q = std::pow(std::sin(q) / q, 2);
    std::vector<double> xi_i, xi_g;
    for (int t = 0; t < 30; ++t) {
      const auto base = new_source(sp.geometry, 900 + t);
      const auto pert = perturb(base, {q, static_cast<std::uint64_t>(7000 + t)});
      const auto a = render_intensity(base, grid), b = render_intensity(pert, grid);
      xi_i.push_back(empirical_correlation_intensity(a, b));
      xi_g.push_back(empirical_correlation_gabor(gabor_map(a, gg), gabor_map(b, gg)).pooled);
    }
    const auto si = stats(xi_i), sg = stats(xi_g);
    EXPECT_LT(std::abs(si.mean - Q), 3.0 * si.se) << "q=" << q << " Xi_I=" << si.mean << " Q=" << Q;
    EXPECT_LT(std::abs(sg.mean - Q), 3.0 * sg.se) << "q=" << q << " Xi_G=" << sg.mean << " Q=" << Q;
  }
}

TEST(GaborEnsemble, FlipRateMatchesQuadrature) {
  const Speckle sp;
  const auto grid = sp.grid(160);
  const double w = 12.0;
  const auto gg = GaborGrid::create(w, 1.5 / w, 0.0, w, 160, 160);
  const double q = 1.2;
  std::vector<GaborMap> base, pert;
  double s2 = 0.0;
  std::size_t n = 0;
  for (int t = 0; t < 80; ++t) {
    const auto src = new_source(sp.geometry, 3000 + t);
    base.push_back(gabor_map(render_intensity(src, grid), gg));
    pert.push_back(gabor_map(render_intensity(perturb(src, {q, static_cast<std::uint64_t>(40 + t)}), grid), gg));
    for (const auto& c : base.back().coefficients)
      for (double v : c) {
        s2 += v * v;
        ++n;
      }
  }
  const double sigma = std::sqrt(s2 / static_cast<double>(n));
  std::vector<double> rates;
  for (std::size_t t = 0; t < base.size(); ++t) rates.push_back(bit_error_rate(binarize(base[t], sigma), pert[t]).rate);
  const auto r = stats(rates);
  const double expected =
      theory::bit_error_probability(1.0, theory::PerturbationFactor::from_q(q), theory::BitErrorMethod::Quadrature)
          .probability;
  EXPECT_LT(std::abs(r.mean - expected), 3.0 * r.se) << r.mean << " vs " << expected;
}

TEST(GaborEnsemble, SpatialCorrelationFollowsExactKernelAtShortRange) {
  const Speckle sp;
  const auto grid = sp.grid(128);
  const double w = 8.0, k = 1.5 / w;
  const auto gg = GaborGrid::create(w, k, 0.0, 2.0, 128, 128);
  const auto p = theory::GaborStatParams::create(w, k, 4.0);
  // Shifts along and across k, up to 2w.
  const std::vector<std::pair<int, int>> shifts{{1, 0}, {2, 0}, {4, 0}, {8, 0}, {0, 2}, {0, 4}, {0, 8}};
  // Pooled ratio of ensemble sums, jackknife over images.
  std::vector<std::vector<double>> cross(shifts.size());
  std::vector<double> var;
  for (int t = 0; t < 60; ++t) {
    const auto m = gabor_map(render_intensity(new_source(sp.geometry, 1200 + t), grid), gg);
    const int nx = gg.count_x(), ny = gg.count_y();
    double v = 0.0;
    for (double c : m.coefficients[0]) v += c * c;
    var.push_back(v / static_cast<double>(gg.points()));
    for (std::size_t s = 0; s < shifts.size(); ++s) {
      const auto [sx, sy] = shifts[s];
      double acc = 0.0;
      int cnt = 0;
      for (int iy = 0; iy + sy < ny; ++iy)
        for (int ix = 0; ix + sx < nx; ++ix) {
          acc += m.at(0, ix, iy) * m.at(0, ix + sx, iy + sy);
          ++cnt;
        }
      cross[s].push_back(acc / cnt);
    }
  }
  const double n = static_cast<double>(var.size());
  double vsum = 0.0;
  for (double v : var) vsum += v;
  for (std::size_t s = 0; s < shifts.size(); ++s) {
    double csum = 0.0;
    for (double c : cross[s]) csum += c;
    const double est = csum / vsum;
    double jk = 0.0;
    for (std::size_t t = 0; t < var.size(); ++t) {
      const double loo = (csum - cross[s][t]) / (vsum - var[t]);
      jk += (loo - est) * (loo - est);
    }
    const double se = std::sqrt((n - 1) / n * jk);
    const Vec2 dx{shifts[s].first * gg.ell, shifts[s].second * gg.ell};
    const double exact = theory::correlation_CG_bessel(p, gg.k(0), dx);
    EXPECT_LT(std::abs(est - exact), 3.0 * se)
        << "dx=(" << dx.x << "," << dx.y << ") emp=" << est << " se=" << se << " exact kernel=" << exact;
    // The Gaussian-C_I closed form stays close to the exact kernel out to 2w.
    EXPECT_LT(std::abs(theory::correlation_CG(p, gg.k(0), gg.k(0), dx) - exact), 0.015);
  }
}
