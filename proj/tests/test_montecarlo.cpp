#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "qrelay/errors.hpp"
#include "qrelay/montecarlo.hpp"
#include "qrelay/simd/kernels.hpp"

using namespace qrelay;

namespace {

const DetectorModel kPerfect{1.0, 0.0, Nanoseconds(1.0)};

SpdcSource single_photon_source() {
  SpdcSource s;
  s.statistics = DistributionFamily::custom;
  s.custom_pmf = {0.0, 1.0};
  return s;
}

SpdcSource thermal_source(double n) {
  SpdcSource s;
  s.pairs_per_mw = n;
  s.pump_power = Milliwatts(1.0);
  return s;
}

CouplerModel calibrated() { return calibrate_coupler(default_coupler_anchors()); }

// Every pulse gated, no losses anywhere, perfect detectors, zero timing jitter.
Scenario ideal_scenario() {
  Scenario s;
  s.gating_rate = s.repetition_rate;
  s.pump_duration = Picoseconds(0.0);
  s.external_source = single_photon_source();
  s.chip_source = single_photon_source();
  for (auto& seg : s.chip.segments()) seg.element.loss = Decibels(0.0);
  s.router = s.bell_coupler = calibrated();
  s.detector_a = s.detector_b = s.detector_c = kPerfect;
  return s;
}

// Moderate rates so every tally fills quickly.
Scenario busy_scenario() {
  Scenario s = ideal_scenario();
  s.pump_duration = Picoseconds(2.5);
  s.external_source = thermal_source(0.05);
  s.chip_source = thermal_source(0.05);
  s.detector_a = s.detector_b = s.detector_c = DetectorModel{0.6, 2e-3, Nanoseconds(1.0)};
  s.monitor = DetectorModel{0.3, 1e-3, Nanoseconds(1.0)};
  s.monitor_loss = Decibels(1.0);
  s.external_link_loss = Decibels(1.0);
  s.delay = Millimeters(1.0);
  return s;
}

void expect_within(double observed, double p, double n, double sigmas, const char* what) {
  const double sd = std::sqrt(n * p * (1.0 - p));
  EXPECT_NEAR(observed, n * p, sigmas * sd + 1e-9) << what;
}

void expect_tally_matches(const CoincidenceTally<std::uint64_t>& obs,
                          const CoincidenceTally<double>& p, double gates) {
  expect_within(obs.singles[0], p.singles[0], gates, 4.5, "singles a");
  expect_within(obs.singles[1], p.singles[1], gates, 4.5, "singles b");
  expect_within(obs.singles[2], p.singles[2], gates, 4.5, "singles c");
  expect_within(obs.ab, p.ab, gates, 4.5, "ab");
  expect_within(obs.ac, p.ac, gates, 4.5, "ac");
  expect_within(obs.bc, p.bc, gates, 4.5, "bc");
  expect_within(obs.abc, p.abc, gates, 4.5, "abc");
}

void expect_invariants(const CoincidenceTally<std::uint64_t>& t) {
  EXPECT_LE(t.abc, std::min({t.ab, t.ac, t.bc}));
  EXPECT_LE(t.ab, std::min(t.singles[0], t.singles[1]));
  EXPECT_LE(t.ac, std::min(t.singles[0], t.singles[2]));
  EXPECT_LE(t.bc, std::min(t.singles[1], t.singles[2]));
}

void expect_conserved(const PhotonTally& p) {
  EXPECT_EQ(p.generated, p.detected + p.lost + p.undetected);
}

}  // namespace

TEST(MonteCarlo, IndistinguishableSinglePhotonsNeverSplit) {
  const auto r = run(ideal_scenario(), 200000, 3, {1});
  EXPECT_EQ(r.gated_pulses, 200000u);
  EXPECT_EQ(r.at_delay.abc, 0u);
  EXPECT_EQ(r.at_delay.ab, 0u);
  EXPECT_GT(r.reference.abc, 0u);
  EXPECT_DOUBLE_EQ(r.overlap, 1.0);
}

TEST(MonteCarlo, DistinguishablePhotonsSplitHalfTheTime) {
  Scenario s = ideal_scenario();
  s.router_voltage = Volts(0.0);  // chip photon always sent to the Bell coupler
  s.delay = Millimeters(1000.0);
  const std::uint64_t n = 400000;
  const auto r = run(s, n, 11, {1});
  expect_within(static_cast<double>(r.at_delay.ab), 0.5, n, 4.0, "ab");
  // No photon reaches D_c with the router fully crossed.
  EXPECT_EQ(r.at_delay.singles[kDetC], 0u);
  // At zero overlap both branches see the same draws and the same outcome.
  EXPECT_EQ(r.at_delay, r.reference);
}

TEST(MonteCarlo, ExpectedCountsOfSinglePhotons) {
  Scenario s = ideal_scenario();
  s.router_voltage = Volts(0.0);
  s.delay = Millimeters(3.0);
  const auto e = expected_counts(s);
  const double o = mode_overlap(s.delay, s.dip_fwhm, 1.0);
  // Balanced coupler: split probability (1 - O) / 2.
  EXPECT_NEAR(e.at_delay.ab, 0.5 * (1.0 - o), 1e-12);
  EXPECT_NEAR(e.reference.ab, 0.5, 1e-12);
  EXPECT_NEAR(e.at_delay.singles[kDetA], 1.0 - 0.25 * (1.0 + o), 1e-12);
  EXPECT_NEAR(o, std::exp(-4.0 * std::numbers::ln2 * std::pow(3.0 / (20.0 * 0.299792458), 2)),
              1e-15);
}

TEST(MonteCarlo, AgreesWithExpectedCounts) {
  const Scenario s = busy_scenario();
  const std::uint64_t n = 2'000'000;
  const auto r = run(s, n, 5, {1});
  const auto e = expected_counts(s);
  const double g = static_cast<double>(r.gated_pulses);
  expect_tally_matches(r.at_delay, e.at_delay, g);
  expect_tally_matches(r.reference, e.reference, g);
  expect_within(static_cast<double>(r.monitor_singles), e.monitor_singles, g, 4.5, "monitor");
}

TEST(MonteCarlo, PhotonConservationAndInvariants) {
  const auto r = run(busy_scenario(), 500000, 9, {1});
  expect_conserved(r.photons_at_delay);
  expect_conserved(r.photons_reference);
  EXPECT_EQ(r.photons_at_delay.generated, r.photons_reference.generated);
  EXPECT_GT(r.photons_at_delay.detected, 0u);
  expect_invariants(r.at_delay);
  expect_invariants(r.reference);
}

TEST(MonteCarlo, GatingSelectsTheExpectedFraction) {
  Scenario s = busy_scenario();
  s.gating_rate = Hertz(600e3);
  const std::uint64_t n = 100'000'000;
  const auto r = run(s, n, 21, {1});
  expect_within(static_cast<double>(r.gated_pulses), 600e3 / 76e6, n, 5.0, "gated");
  EXPECT_EQ(r.pulses_simulated, n);
}

TEST(MonteCarlo, DeterministicAcrossWorkersAndIsa) {
  Scenario s = busy_scenario();
  s.gating_rate = Hertz(20e6);
  const std::uint64_t n = 5'000'000;  // several blocks
  const auto one = run(s, n, 77, {1});
  EXPECT_EQ(one, run(s, n, 77, {2}));
  EXPECT_EQ(one, run(s, n, 77, {5}));
  simd::force_isa(simd::Isa::scalar);
  const auto scalar = run(s, n, 77, {3});
  simd::force_isa(std::nullopt);
  EXPECT_EQ(one, scalar);
  EXPECT_NE(one, run(s, n, 78, {1}));
}

TEST(MonteCarlo, NoDarkCountsMeansNoSubtraction) {
  Scenario s = busy_scenario();
  s.detector_a = s.detector_b = s.detector_c = DetectorModel{0.6, 0.0, Nanoseconds(1.0)};
  const auto r = run(s, 300000, 1, {1});
  EXPECT_DOUBLE_EQ(r.net_at_delay.accidental, 0.0);
  EXPECT_DOUBLE_EQ(r.net_at_delay.net, r.net_at_delay.raw);
  EXPECT_DOUBLE_EQ(r.net_visibility.value, r.raw_visibility.value);
}

TEST(MonteCarlo, DarkOnlyThreefoldsAreSubtracted) {
  Scenario s = busy_scenario();
  s.external_source = thermal_source(0.0);
  s.chip_source = thermal_source(0.0);
  s.detector_a = s.detector_b = s.detector_c = DetectorModel{0.6, 0.05, Nanoseconds(1.0)};
  const auto r = run(s, 2'000'000, 4, {1});
  EXPECT_GT(r.net_at_delay.raw, 100.0);
  EXPECT_LT(r.net_at_delay.net, 3.0 * r.net_at_delay.net_error);
  EXPECT_NEAR(r.net_at_delay.accidental, r.net_at_delay.raw, 4.0 * std::sqrt(r.net_at_delay.raw));
}

TEST(Accidentals, InversionRecoversPhotonOnlyRates) {
  // Photon-only joint click probabilities (any consistent set works).
  const double pa = 0.1, pb = 0.2, pc = 0.3, pab = 0.05, pac = 0.04, pbc = 0.07, pabc = 0.02;
  const std::array<double, 3> d{0.01, 0.02, 0.03};
  // Clicks are photon OR dark, darks independent.
  auto single = [](double di, double pi) { return di + (1.0 - di) * pi; };
  auto pair = [](double di, double dj, double pi, double pj, double pij) {
    return 1.0 - (1.0 - pi) * (1.0 - di) - (1.0 - pj) * (1.0 - dj) +
           (1.0 - pi - pj + pij) * (1.0 - di) * (1.0 - dj);
  };
  CoincidenceTally<double> t;
  t.singles = {single(d[0], pa), single(d[1], pb), single(d[2], pc)};
  t.ab = pair(d[0], d[1], pa, pb, pab);
  t.ac = pair(d[0], d[2], pa, pc, pac);
  t.bc = pair(d[1], d[2], pb, pc, pbc);
  const double none3 = (1.0 - d[0]) * (1.0 - d[1]) * (1.0 - d[2]) *
                       (1.0 - pa - pb - pc + pab + pac + pbc - pabc);
  const double none_a = (1.0 - d[0]) * (1.0 - pa);
  const double none_b = (1.0 - d[1]) * (1.0 - pb);
  const double none_c = (1.0 - d[2]) * (1.0 - pc);
  const double none_ab = (1.0 - d[0]) * (1.0 - d[1]) * (1.0 - pa - pb + pab);
  const double none_ac = (1.0 - d[0]) * (1.0 - d[2]) * (1.0 - pa - pc + pac);
  const double none_bc = (1.0 - d[1]) * (1.0 - d[2]) * (1.0 - pb - pc + pbc);
  t.abc = 1.0 - none_a - none_b - none_c + none_ab + none_ac + none_bc - none3;

  const auto r = subtract_accidentals(t, 1.0, d, false);
  const double expected = d[0] * pbc + d[1] * pac + d[2] * pab + d[0] * d[1] * pc +
                          d[0] * d[2] * pb + d[1] * d[2] * pa + d[0] * d[1] * d[2];
  EXPECT_NEAR(r.accidental, expected, 1e-14);
  EXPECT_NEAR(r.net, t.abc - expected, 1e-14);
  EXPECT_DOUBLE_EQ(r.raw, t.abc);
  EXPECT_THROW(subtract_accidentals(t, 0.0, d, false), DomainError);
}

TEST(Accidentals, CountsScaleWithGates) {
  CoincidenceTally<double> t;
  t.singles = {100.0, 120.0, 500.0};
  t.ab = 10.0;
  t.ac = 20.0;
  t.bc = 25.0;
  t.abc = 5.0;
  const std::array<double, 3> d{1e-3, 1e-3, 1e-3};
  const auto r = subtract_accidentals(t, 1e5, d, true);
  EXPECT_GT(r.accidental, 0.0);
  EXPECT_NEAR(r.net, 5.0 - r.accidental, 1e-12);
  EXPECT_GT(r.net_error, std::sqrt(5.0));
}

TEST(MonteCarlo, PredictedVisibilityMatchesOracle) {
  Scenario s = ideal_scenario();
  s.pump_duration = Picoseconds(2.5);
  EXPECT_NEAR(predicted_visibility(s), scenario_probabilities(s).timing_visibility, 1e-12);
  const double tc = 0.441 * std::pow(1530e-9, 2) / (299792458.0 * 200e-12) * 1e12;
  EXPECT_NEAR(scenario_probabilities(s).timing_visibility,
              1.0 / std::sqrt(std::pow(2.5 / tc, 2) + 1.0), 1e-12);

  s.external_source = thermal_source(0.0);
  EXPECT_TRUE(std::isnan(predicted_visibility(s)));
}

TEST(MonteCarlo, AnalyticScanIsLinearInOverlap) {
  const Scenario s = busy_scenario();
  std::vector<double> x;
  for (int i = -30; i <= 30; ++i) x.push_back(0.5 * i);
  const auto scan = scan_dip(s, x, 0, 1);
  ASSERT_EQ(scan.points.size(), x.size());

  auto net_at = [&](double mm) {
    Scenario t = s;
    t.delay = Millimeters(mm);
    const auto e = expected_counts(t);
    return subtract_accidentals(e.at_delay, 1.0, e.dark_probability, false).net;
  };
  const double r0 = net_at(0.0);
  const double r_ref = net_at(1e4);
  const double width = 20.0 * 0.299792458;
  for (const auto& sample : scan.profile.samples) {
    const double g = std::exp(-4.0 * std::numbers::ln2 * std::pow(sample.position_mm / width, 2));
    EXPECT_NEAR(sample.rate, r_ref - (r_ref - r0) * g, 1e-12 * r_ref);
  }
  ASSERT_TRUE(scan.profile.fit) << scan.profile.fit_failure;
  EXPECT_NEAR(scan.profile.fit->fwhm_mm, width, 0.005 * width);
}

TEST(MonteCarlo, AnalyticScanReproducesDipProfile) {
  const Scenario s = busy_scenario();
  std::vector<double> x;
  for (int i = -20; i <= 20; ++i) x.push_back(0.75 * i);
  const auto scan = scan_dip(s, x, 0, 1);
  Scenario far = s;
  far.delay = Millimeters(1e4);
  const auto e = expected_counts(far);
  const double baseline = subtract_accidentals(e.at_delay, 1.0, e.dark_probability, false).net;
  const double depth = 1.0 - scan.points[20].threefold.net / baseline;
  const auto model = dip_profile(depth, s.dip_fwhm, baseline, x);
  ASSERT_EQ(model.samples.size(), scan.profile.samples.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_NEAR(scan.profile.samples[i].rate, model.samples[i].rate, 1e-12 * baseline);
  }
  EXPECT_NEAR(scan.profile.fit->visibility, model.fit->visibility, 1e-6);
}

TEST(MonteCarlo, SampledScanFitsTheDip) {
  const Scenario s = busy_scenario();
  std::vector<double> x;
  for (int i = -8; i <= 8; ++i) x.push_back(1.5 * i);
  const auto scan = scan_dip(s, x, 1'000'000, 2, {1});
  ASSERT_TRUE(scan.profile.fit) << scan.profile.fit_failure;
  for (const auto& p : scan.points) ASSERT_TRUE(p.report);
  EXPECT_NEAR(scan.profile.fit->fwhm_mm, 20.0 * 0.299792458,
              4.0 * scan.profile.fit->fwhm_error_mm);
}

TEST(MonteCarlo, Preconditions) {
  const Scenario s = busy_scenario();
  EXPECT_THROW(run(s, 0, 1), DomainError);
  EXPECT_THROW(scan_dip(s, std::vector<double>{0.0, 1.0}, 0, 1), DomainError);
  EXPECT_THROW(scan_dip(s, std::vector<double>{-5.0, 0.0, 5.0}, 0, 1), DomainError);

  Scenario bad = s;
  bad.gating_rate = Hertz(1e9);
  EXPECT_THROW(run(bad, 10, 1), ConfigError);
  bad = s;
  bad.external_source.statistics = DistributionFamily::custom;
  bad.external_source.custom_pmf = {0.5};
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = s;
  bad.detector_b.efficiency = 2.0;
  EXPECT_THROW(expected_counts(bad), ConfigError);
  bad = s;
  bad.dip_fwhm = Picoseconds(0.0);
  EXPECT_THROW(bad.validate(), ConfigError);
}
