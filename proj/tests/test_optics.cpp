#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "qrelay/errors.hpp"
#include "qrelay/optics.hpp"

using namespace qrelay;

namespace {

constexpr double kPi = 3.14159265358979323846;

double cross(double k, double g) {
  const double r = std::sqrt(k * k + g * g);
  return k * k / (r * r) * std::pow(std::sin(r), 2);
}

// Detuning g with cross(pi/2, g) = target on the first lobe, by bisection.
double detuning_for(double target) {
  double lo = 0.0, hi = std::sqrt(3.0) * kPi / 2.0;  // first zero of T
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (cross(kPi / 2.0, mid) > target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(Coupler, DefaultCalibrationHitsAnchors) {
  const auto anchors = default_coupler_anchors();
  const auto m = calibrate_coupler(anchors);
  EXPECT_GE(m.cross_ratio(Volts(0.0)), 0.999);
  EXPECT_NEAR(m.cross_ratio(Volts(30.0)), 0.5, 1e-9);
  const double g = detuning_for(0.5);
  EXPECT_NEAR(m.detuning_ratio(Volts(30.0)), g / (kPi / 2.0), 1e-7);
  EXPECT_NEAR(m.detuning_per_volt * 30.0, g, 1e-7);
  EXPECT_TRUE(m.detuning_constrained);
  EXPECT_LT(m.fit_residual, 1e-9);
}

TEST(Coupler, CrossRatioMatchesCoupledModeFormula) {
  CouplerModel m;
  m.detuning_per_volt = 0.05;
  for (double v : {0.0, 5.0, 17.0, 40.0}) {
    EXPECT_NEAR(m.cross_ratio(Volts(v)), cross(kPi / 2.0, 0.05 * v), 1e-14);
    EXPECT_NEAR(m.bar_ratio(Volts(v)) + m.cross_ratio(Volts(v)), 1.0, 1e-15);
    EXPECT_DOUBLE_EQ(coupler_ratio(m, Volts(v)), m.cross_ratio(Volts(v)));
  }
}

TEST(Coupler, ThreeAnchorLeastSquares) {
  CouplerModel truth;
  truth.detuning_per_volt = 0.03;
  std::vector<CalibrationAnchor> anchors;
  for (double v : {0.0, 20.0, 35.0}) anchors.push_back({Volts(v), truth.cross_ratio(Volts(v))});
  const auto m = calibrate_coupler(anchors);
  EXPECT_NEAR(m.detuning_per_volt, 0.03, 1e-7);
}

TEST(Coupler, FittedCouplingStrength) {
  CouplerModel truth;
  truth.coupling_strength_times_length = 1.3;
  truth.detuning_per_volt = 0.04;
  std::vector<CalibrationAnchor> anchors;
  for (double v : {0.0, 10.0, 25.0, 30.0}) anchors.push_back({Volts(v), truth.cross_ratio(Volts(v))});
  CalibrationOptions opt;
  opt.fit_coupling_strength = true;
  const auto m = calibrate_coupler(anchors, opt);
  EXPECT_NEAR(m.coupling_strength_times_length, 1.3, 1e-4);
  EXPECT_NEAR(m.detuning_per_volt, 0.04, 1e-4);
}

TEST(Coupler, ZeroVoltageOnlyLeavesSlopeUnconstrained) {
  const std::vector<CalibrationAnchor> anchors{{Volts(0.0), 1.0}};
  const auto m = calibrate_coupler(anchors);
  EXPECT_FALSE(m.detuning_constrained);
  EXPECT_DOUBLE_EQ(m.detuning_per_volt, 0.0);
}

TEST(Coupler, UnreachableAnchorsThrow) {
  EXPECT_THROW(calibrate_coupler(std::vector<CalibrationAnchor>{}), CalibrationError);
  EXPECT_THROW(calibrate_coupler(std::vector<CalibrationAnchor>{{Volts(0.0), 1.2}}),
               CalibrationError);
  CalibrationOptions weak;
  weak.coupling_strength_times_length = 1.0;  // sin^2(1) < 1
  EXPECT_THROW(calibrate_coupler(std::vector<CalibrationAnchor>{{Volts(0.0), 0.99}}, weak),
               CalibrationError);
  weak.coupling_strength_times_length = 2.0;
  EXPECT_THROW(calibrate_coupler(std::vector<CalibrationAnchor>{{Volts(0.0), 0.5}}, weak),
               CalibrationError);
}

TEST(Coupler, AnchorCsv) {
  std::istringstream ok("voltage_V,cross_ratio\n0,1\r\n30,0.5\n");
  const auto a = read_anchor_csv(ok);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_DOUBLE_EQ(a[1].voltage.value(), 30.0);
  EXPECT_DOUBLE_EQ(a[1].cross_ratio, 0.5);

  std::istringstream bad_header("v,t\n0,1\n");
  EXPECT_THROW(read_anchor_csv(bad_header), ConfigError);
  std::istringstream bad_row("voltage_V,cross_ratio\n0;1\n");
  EXPECT_THROW(read_anchor_csv(bad_row), ConfigError);
  std::istringstream empty("");
  EXPECT_THROW(read_anchor_csv(empty), ConfigError);
}

TEST(Detector, DarkProbabilityPerGate) {
  DetectorModel d{0.1, 1e-5, Nanoseconds(2.5)};
  EXPECT_NEAR(d.dark_prob_per_gate(), 1.0 - std::pow(1.0 - 1e-5, 2.5), 1e-10 * 2.5e-5);
  EXPECT_NEAR(detector_click_prob(d, 0), d.dark_prob_per_gate(), 1e-10 * 2.5e-5);
  EXPECT_NEAR(detector_click_prob(d, 3),
              1.0 - std::pow(0.9, 3) * (1.0 - d.dark_prob_per_gate()), 1e-15);
  EXPECT_THROW((DetectorModel{1.5, 0.0, Nanoseconds(1.0)}).validate(), DomainError);
  EXPECT_THROW((DetectorModel{0.5, 0.0, Nanoseconds(0.0)}).validate(), DomainError);
}

TEST(Filter, RectangularTransmission) {
  Filter f{Nanometers(1530.0), Picometers(200.0), Decibels(1.0)};
  EXPECT_NEAR(f.transmission(Nanometers(1530.09)), std::pow(10.0, -0.1), 1e-15);
  EXPECT_DOUBLE_EQ(f.transmission(Nanometers(1530.11)), 0.0);
}

TEST(Filter, GaussianOverlapMatchesErf) {
  SpdcSource s;
  s.spectrum = SpectralMode(Nanometers(1532.0), Picometers(4000.0), Lineshape::gaussian);
  Filter f{Nanometers(1531.0), Picometers(1000.0), Decibels(0.0)};
  // Gaussian with FWHM w: sigma = w / (2 sqrt(2 ln 2)).
  const double sigma = 4.0 / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
  auto cdf = [&](double x) { return 0.5 * std::erfc(-(x - 1532.0) / (sigma * std::sqrt(2.0))); };
  EXPECT_NEAR(filter_overlap(s, f), cdf(1531.5) - cdf(1530.5), 1e-9);
}

TEST(Filter, Sinc2OverlapMatchesRiemannSum) {
  SpdcSource s;  // sinc^2 at 1532 nm, 80 nm wide
  Filter f{Nanometers(1530.0), Picometers(200.0), Decibels(0.0)};
  auto density = [&](double x) {
    const double u = 1.3915573782515103 * (x - 1532.0) / 40.0;
    return u == 0.0 ? 1.0 : std::pow(std::sin(u) / u, 2);
  };
  const int n = 200000;
  double in_band = 0.0, total = 0.0;
  for (int i = 0; i < n; ++i) {
    in_band += density(1529.9 + 0.2 * (i + 0.5) / n) * 0.2 / n;
  }
  const double span = 80.0 * 2000.0;  // tail beyond +-span is ~1e-4 of the area
  const int m = 4000000;
  for (int i = 0; i < m; ++i) total += density(1532.0 - span + 2.0 * span * (i + 0.5) / m) * 2.0 * span / m;
  EXPECT_NEAR(filter_overlap(s, f), in_band / total, 2e-4 * in_band / total);
  EXPECT_NEAR(spdc_spectral_density(s, Nanometers(1572.0)), 0.5, 1e-12);
}

TEST(ChipLayout, DefaultInsertionLoss) {
  const auto chip = ChipLayout::relay_chip();
  chip.validate();
  EXPECT_NEAR(chip_insertion_loss(chip).value(), 8.5, 1e-12);
  EXPECT_NEAR(chip.path_loss(ChipLayout::kAlicePort, ChipLayout::kPortB).value(), 8.5, 1e-12);
  EXPECT_NEAR(chip.path_loss(ChipLayout::kSource, ChipLayout::kPortA).value(), 5.25, 1e-12);
  EXPECT_NEAR(chip.path_loss(ChipLayout::kSource, ChipLayout::kPortC).value(), 4.75, 1e-12);
  const auto path = chip.path(ChipLayout::kAlicePort, ChipLayout::kPortA);
  EXPECT_EQ(path.front(), ChipLayout::kAlicePort);
  EXPECT_EQ(path.back(), ChipLayout::kPortA);
}

TEST(ChipLayout, MeasuredOverrideRescalesSegments) {
  auto chip = ChipLayout::relay_chip();
  chip.measured_insertion_loss = Decibels(9.0);
  EXPECT_DOUBLE_EQ(chip_insertion_loss(chip).value(), 9.0);
  const auto scaled = chip.calibrated_to_measurement();
  EXPECT_NEAR(scaled.path_loss(ChipLayout::kAlicePort, ChipLayout::kPortA).value(), 9.0, 1e-12);
  EXPECT_NEAR(scaled.path_loss(ChipLayout::kSource, ChipLayout::kPortC).value(), 4.75 * 9.0 / 8.5,
              1e-12);
}

TEST(ChipLayout, StructuralErrors) {
  auto cyclic = ChipLayout::relay_chip();
  cyclic.add_segment(ChipLayout::kBellCoupler, ChipLayout::kRouter, {"back", Decibels(0.1)});
  EXPECT_THROW(cyclic.validate(), ConfigError);

  auto missing = ChipLayout::relay_chip();
  missing.segments().front().element.loss.reset();
  EXPECT_THROW(missing.validate(), ConfigError);
  EXPECT_THROW(missing.path_loss(ChipLayout::kAlicePort, ChipLayout::kPortA), ConfigError);

  auto dead_end = ChipLayout::relay_chip();
  dead_end.add_node("stub", NodeKind::waveguide);
  dead_end.add_segment(ChipLayout::kSource, "stub", {"stub_loss", Decibels(1.0)});
  EXPECT_THROW(dead_end.validate(), ConfigError);

  auto chip = ChipLayout::relay_chip();
  EXPECT_THROW(chip.add_node(ChipLayout::kSource, NodeKind::source), ConfigError);
  EXPECT_THROW(chip.path_loss(ChipLayout::kPortA, ChipLayout::kAlicePort), ConfigError);
  EXPECT_THROW(chip.path_loss("nowhere", ChipLayout::kPortA), ConfigError);
}

TEST(Source, PairDistributionFollowsStatistics) {
  SpdcSource s;
  s.pairs_per_mw = 0.01;
  s.pump_power = Milliwatts(5.0);
  EXPECT_DOUBLE_EQ(s.mean_pairs(), 0.05);
  EXPECT_EQ(s.pair_distribution().family(), DistributionFamily::thermal);
  s.statistics = DistributionFamily::poisson;
  EXPECT_NEAR(s.pair_distribution()[0], std::exp(-0.05), 1e-15);
  s.statistics = DistributionFamily::custom;
  s.custom_pmf = {0.0, 1.0};
  EXPECT_DOUBLE_EQ(s.pair_distribution()[1], 1.0);
}
