#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "speckle/montecarlo/estimators.hpp"
#include "speckle/montecarlo/report.hpp"
#include "speckle/montecarlo/suites.hpp"

using namespace speckle;
using namespace speckle::mc;

namespace {

// 128^2 grid, M = 4 px, Gabor w = 2M.
EnsembleConfig small_config(std::size_t trials, std::uint64_t seed = 3) {
  auto c = desk_config(trials, seed);
  c.grid = DetectorGrid::create(128, 128, c.grid.pixel_pitch);
  c.gabor = gabor::GaborGrid::create(8.0, 1.5 / 8.0, 0.0, 4.0, 128, 128);
  c.scan.w_over_M = {1.7};
  c.scan.wk = {1.0};
  c.scan.max_side = 160;
  c.q_list = {0.0, 1.0, std::numbers::pi};
  c.T_list = {0.0};
  return c;
}

void expect_same_rows(const ComparisonReport& a, const ComparisonReport& b) {
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].quantity, b.rows[i].quantity);
    EXPECT_EQ(a.rows[i].empirical.value, b.rows[i].empirical.value) << a.rows[i].quantity;
    EXPECT_EQ(a.rows[i].empirical.std_error, b.rows[i].empirical.std_error) << a.rows[i].quantity;
  }
}

}  // namespace

TEST(Estimators, CompensatedSumAndMean) {
  const std::vector<double> x{1e16, 1.0, -1e16, 1.0};
  EXPECT_EQ(stable_sum(x), 2.0);
  const std::vector<double> y{1.0, 2.0, 3.0, 4.0};
  const auto m = mean_estimate("m", y);
  EXPECT_DOUBLE_EQ(m.value, 2.5);
  EXPECT_DOUBLE_EQ(m.std_error, std::sqrt((2.25 + 0.25 + 0.25 + 2.25) / 3.0 / 4.0));
  EXPECT_EQ(m.n_eff, 4.0);
  EXPECT_THROW(mean_estimate("m", std::vector<double>{1.0}), InvalidArgument);
}

TEST(Estimators, JackknifeOfLinearStatisticIsClassicalError) {
  const std::vector<double> y{0.3, 1.7, -0.4, 2.2, 0.9, 1.1};
  std::vector<std::vector<double>> cols;
  for (double v : y) cols.push_back({v, 1.0});
  const auto jk = jackknife("r", cols, [](std::span<const double> c) { return c[0] / c[1]; });
  const auto cl = mean_estimate("m", y);
  EXPECT_NEAR(jk.value, cl.value, 1e-15);
  EXPECT_NEAR(jk.std_error, cl.std_error, 1e-15);
}

TEST(Estimators, KsDistance) {
  EXPECT_DOUBLE_EQ(ks_distance_exponential({std::log(2.0)}, 1.0), 0.5);
  // Exact exponential quantiles at (i + 1/2)/n give D = 1/(2n).
  std::vector<double> q;
  for (int i = 0; i < 1000; ++i) q.push_back(-std::log1p(-(i + 0.5) / 1000.0));
  EXPECT_NEAR(ks_distance_exponential(q, 1.0), 0.0005, 1e-12);
  EXPECT_NEAR(effective_pixels(1000.0, 1.0, 1.0), 1000.0 / std::numbers::pi, 1e-12);
}

TEST(Report, ChecksAndZScores) {
  ComparisonReport r;
  r.suite = "s";
  EXPECT_TRUE(r.add({"a", 1.1, 0.05, 10}, 1.0, "op").pass);
  EXPECT_NEAR(r.rows.back().z_score, 2.0, 1e-12);
  EXPECT_FALSE(r.add({"b", 1.2, 0.05, 10}, 1.0, "op").pass);
  EXPECT_TRUE(r.add({"c", 1.04, 0.0, 1}, 1.0, "op", Check::Relative, 0.05).pass);
  EXPECT_FALSE(r.add({"d", 1.06, 0.0, 1}, 1.0, "op", Check::Relative, 0.05).pass);
  EXPECT_TRUE(r.add({"e", 0.009, 0.0, 1}, 0.01, "op", Check::Below, 0.01).pass);
  EXPECT_TRUE(r.add({"f", 1.049, 0.01, 1}, 1.0, "op", Check::Margin, 0.02).pass);
  EXPECT_FALSE(r.add({"g", 1.06, 0.01, 1}, 1.0, "op", Check::Margin, 0.02).pass);
  EXPECT_TRUE(r.add({"h", 99.0, 0.0, 1}, 1.0, "op", Check::Info).pass);
  EXPECT_FALSE(r.add({"i", 1.0, 0.0, 1}, 0.0, "op").pass);
  EXPECT_FALSE(r.add({"j", std::nan(""), 1.0, 1}, 0.0, "op").pass);
  EXPECT_EQ(r.failures(), 5u);
  EXPECT_FALSE(r.passed());
  ASSERT_NE(r.find("c"), nullptr);
  EXPECT_EQ(r.find("zz"), nullptr);
}

TEST(Report, CsvQuotingAndJsonSchema) {
  ComparisonReport r;
  r.suite = "demo";
  r.add({"C_I(r/M=0.5)", 0.94, 0.01, 100}, 0.939, "theory::intensity_correlation, lattice");
  r.tables.push_back({"t", {"x", "y"}, {{1.0, 2.0}}});
  std::ostringstream csv;
  write_report_csv(csv, r);
  EXPECT_EQ(csv.str().rfind("suite,quantity,", 0), 0u);
  EXPECT_NE(csv.str().find("\"theory::intensity_correlation, lattice\""), std::string::npos);
  EXPECT_NE(csv.str().find("\r\n"), std::string::npos);
  std::ostringstream tcsv;
  write_table_csv(tcsv, r.tables[0]);
  EXPECT_EQ(tcsv.str(), "x,y\r\n1,2\r\n");

  const auto j = report_to_json(r);
  EXPECT_EQ(validate_report_json(j), "");
  EXPECT_EQ(j["schema"], kReportSchema);
  auto bad = j;
  bad.erase("rows");
  EXPECT_NE(validate_report_json(bad), "");
  bad = j;
  bad["schema"] = "other/2";
  EXPECT_NE(validate_report_json(bad), "");
  // Round trip through text keeps it valid.
  EXPECT_EQ(validate_report_json(nlohmann::json::parse(j.dump())), "");
}

TEST(Report, ForcedFailureFixture) {
  // A correct row turns red once its theory value is moved by 10 standard errors.
  ComparisonReport r;
  const EstimatorResult e{"x", 0.5, 0.01, 100};
  EXPECT_TRUE(r.add(e, 0.51, "op").pass);
  EXPECT_FALSE(r.add(e, 0.51 + 10 * e.std_error, "op").pass);
}

TEST(Ensemble, ConfigValidation) {
  auto c = small_config(2);
  EXPECT_NO_THROW(c.validate());
  c.trials = 1;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = small_config(4);
  c.q_list = {4.0};
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = small_config(4);
  c.gabor.width = 100;
  EXPECT_THROW(c.validate(), InvalidArgument);
  EXPECT_THROW(run_intensity_suite(small_config(1)), InvalidArgument);
  EXPECT_THROW(parse_suite("nope"), InvalidArgument);
  EXPECT_EQ(parse_suite("mi"), SuiteName::Mi);
}

TEST(IntensitySuite, PassesAtSmallScale) {
  const auto r = run_intensity_suite(small_config(40));
  for (const auto& row : r.rows) EXPECT_TRUE(row.pass) << row.quantity << " z=" << row.z_score;
  const auto* iav = r.find("I_av");
  ASSERT_NE(iav, nullptr);
  // First moment against the continuum pi R^2 / z^2 as well.
  const auto g = small_config(2).geometry;
  EXPECT_NEAR(iav->empirical.value / g.nominal_mean_intensity(), 1.0,
              3.0 * iav->empirical.std_error / g.nominal_mean_intensity() + std::abs(g.mean_intensity() / g.nominal_mean_intensity() - 1.0));
}

TEST(IntensitySuite, BitIdenticalAcrossThreadCounts) {
  auto c = small_config(6);
  c.threads = 1;
  const auto a = run_intensity_suite(c);
  c.threads = 3;
  const auto b = run_intensity_suite(c);
  expect_same_rows(a, b);
}

TEST(IntensitySuite, StandardErrorsShrinkWithTrials) {
  const auto a = run_intensity_suite(small_config(30, 5));
  const auto b = run_intensity_suite(small_config(60, 5));
  double ratio = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    if (a.rows[i].empirical.std_error == 0.0) continue;
    ratio += b.rows[i].empirical.std_error / a.rows[i].empirical.std_error;
    ++n;
  }
  ratio /= n;
  EXPECT_GE(ratio, 0.6);
  EXPECT_LE(ratio, 0.85);
}

TEST(GaborSuite, SmallScaleRowsAndOracles) {
  auto c = small_config(30);
  const auto r = run_gabor_suite(c);
  for (const auto& row : r.rows) {
    if (row.quantity.rfind("kurtosis", 0) == 0) continue;  // w = 2M is outside the large-w regime
    // Ensemble-wide intensity fluctuations shift every sigma row together; the
    // 5% closed-form band needs the acceptance-size ensemble.
    if (row.check == Check::Relative && row.quantity.rfind("sigma_G", 0) == 0) continue;
    EXPECT_TRUE(row.pass) << row.quantity << " " << row.empirical.value << " vs " << row.theoretical;
  }
  ASSERT_NE(r.find("oracle_gaussian_part_over_3m2sq(N_reg=12)"), nullptr);
  EXPECT_NEAR(r.find("oracle_gaussian_part_over_3m2sq(N_reg=12)")->empirical.value, 1.0, 1e-10);
  EXPECT_NEAR(r.find("oracle_small_w_kurtosis_ratio(N_reg=37)")->empirical.value, 2.0, 2e-3);
  const auto* scan = r.table("sigma_scan");
  ASSERT_NE(scan, nullptr);
  EXPECT_EQ(scan->rows.size(), 1u);
}

TEST(PerturbationSuite, ExactEndpointsAndScatter) {
  const auto c = small_config(12);
  const auto r = run_perturbation_suite(c);
  EXPECT_EQ(r.find("Xi_I(q=0)")->empirical.value, 1.0);
  EXPECT_EQ(r.find("Xi_G(q=0)")->empirical.value, 1.0);
  EXPECT_EQ(r.find("flip_rate(q=0,T=0)")->empirical.value, 0.0);
  for (const auto& row : r.rows) EXPECT_TRUE(row.pass) << row.quantity << " z=" << row.z_score;
  const auto* sc = r.table("pair_scatter");
  ASSERT_NE(sc, nullptr);
  EXPECT_EQ(sc->rows.size(), c.trials * c.q_list.size());
}

TEST(MiConsistency, NoiseBlocksAndMiRows) {
  const auto r = run_mi_consistency(small_config(20));
  for (const auto& row : r.rows) EXPECT_TRUE(row.pass) << row.quantity << " z=" << row.z_score;
  EXPECT_NEAR(r.find("Sigma_N_12(0)")->theoretical, 0.0, 0.0);
  int mi_rows = 0;
  for (const auto& row : r.rows) mi_rows += row.quantity.rfind("MI_exact_sum", 0) == 0 && row.check == Check::Relative;
  EXPECT_EQ(mi_rows, 6);
}

TEST(MiConsistency, PedestalLeavesCoefficientsUnchanged) {
  const auto g = DetectorGrid::create(64, 64, 1.0);
  const auto gg = gabor::GaborGrid::create(4.0, 0.4, 0.2, 4.0, 64, 64);
  const auto n = theory::NoiseParams::create(2.0);
  const auto a = gabor::gabor_map(noise_image(g, n, 10.0, 9), gg);
  const auto b = gabor::gabor_map(noise_image(g, n, 20.0, 9), gg);
  for (int d = 0; d < 2; ++d)
    for (std::size_t i = 0; i < gg.points(); ++i)
      EXPECT_NEAR(a.coefficients[d][i], b.coefficients[d][i], 1e-12);
}

TEST(DriftSuite, NoisyPairsSitAboveTheLine) {
  auto c = small_config(2);
  c.grid = DetectorGrid::create(192, 192, c.grid.pixel_pitch);
  c.gabor = gabor::GaborGrid::create(8.0, 1.5 / 8.0, 0.0, 4.0, 192, 192);
  DriftSuiteOptions o;
  o.sequences = 3;
  o.images = 6;
  o.q_step = 0.8;
  const auto r = run_drift_suite(c, o);
  ASSERT_NE(r.find("slope_Xi_G_on_Xi_I(noiseless)"), nullptr);
  EXPECT_NEAR(r.find("slope_Xi_G_on_Xi_I(noiseless)")->empirical.value, 1.0, 0.25);
  EXPECT_TRUE(r.find("fraction_above_line(noisy)")->pass);
  ASSERT_NE(r.table("drift_scatter"), nullptr);
  EXPECT_EQ(r.table("drift_scatter")->rows.size(), 4u * 15u);
  c.threads = 3;
  expect_same_rows(r, run_drift_suite(c, o));
}
