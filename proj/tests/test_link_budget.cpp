#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "qrelay/errors.hpp"
#include "qrelay/link_budget.hpp"

using namespace qrelay;

namespace {

const LinkModel kDirect{LinkVariant::direct, std::nullopt, std::nullopt, ""};
const LinkModel kStandard{LinkVariant::standard_relay, std::nullopt, std::nullopt, ""};
const LinkModel kFoldedLossless{LinkVariant::folded_relay, std::nullopt, Decibels(0.0), ""};

// SNR = 1 reach of the direct link: mu eta 10^(-a L / 10) = d.
double direct_reach(const LinkParams& p, double ratio = 1.0) {
  const double d = p.detector.dark_prob_per_gate();
  return 10.0 / p.fiber_loss_db_per_km *
         std::log10(p.mean_photon_per_pulse * p.detector.efficiency / (ratio * d));
}

}  // namespace

TEST(LinkBudget, DirectLinkAnchorsAtOne) {
  const LinkParams p;
  const auto r = link_rates(kDirect, p, Kilometers(0.0));
  EXPECT_DOUBLE_EQ(r.normalized_rate, 1.0);
  EXPECT_DOUBLE_EQ(r.qber, 0.5 * 1e-6 / (0.1 + 1e-6));
  EXPECT_DOUBLE_EQ(r.relay_position, 0.0);
}

TEST(LinkBudget, DirectReachClosedForm) {
  const LinkParams p;
  EXPECT_NEAR(direct_reach(p), 250.0, 1e-9);
  const auto m = max_distance(kDirect, p);
  EXPECT_FALSE(m.unbounded);
  EXPECT_NEAR(m.km, 250.0, 0.1);
  LinkParams q = p;
  q.fiber_loss_db_per_km = 0.25;
  q.detector.dark_prob_per_ns = 1e-5;
  EXPECT_NEAR(max_distance(kDirect, q).km, direct_reach(q), 0.1);
}

TEST(LinkBudget, QberCriterionClosedForm) {
  const LinkParams p;
  // 0.5 A / (S + A) <= q  <=>  S / A >= (0.5 - q) / q.
  const double ratio = (0.5 - 0.11) / 0.11;
  EXPECT_NEAR(ratio, 3.545, 1e-3);
  const auto m = max_distance(kDirect, p, DistanceCriterion::qber_threshold(0.11));
  EXPECT_NEAR(m.km, direct_reach(p, ratio), 0.1);
}

TEST(LinkBudget, OneDecadePerFiftyKilometres) {
  const LinkParams p;
  const auto a = link_rates(kDirect, p, Kilometers(100.0));
  const auto b = link_rates(kDirect, p, Kilometers(150.0));
  EXPECT_NEAR(a.signal_prob / b.signal_prob, 10.0, 1e-9);
}

TEST(LinkBudget, RatesDecreaseWithDistance) {
  const LinkParams p;
  for (const auto& m : comparison_models(Decibels(9.0))) {
    double previous = INFINITY;
    for (double km = 0.0; km <= 500.0; km += 25.0) {
      LinkModel fixed = m;
      if (m.variant != LinkVariant::direct) fixed.relay_position = 0.5;
      const double r = link_rates(fixed, p, Kilometers(km)).normalized_rate;
      EXPECT_LE(r, previous) << m.name() << " " << km;
      previous = r;
    }
  }
}

TEST(LinkBudget, LongRangeQberApproachesHalf) {
  const LinkParams p;
  EXPECT_NEAR(link_rates(kDirect, p, Kilometers(2000.0)).qber, 0.5, 1e-6);
  EXPECT_NEAR(link_rates(kStandard, p, Kilometers(3000.0)).qber, 0.5, 1e-3);
}

TEST(LinkBudget, StandardRelayMidpointSignal) {
  LinkParams p;
  const double l = 200.0;
  LinkModel mid = kStandard;
  mid.relay_position = 0.5;
  const auto r = link_rates(mid, p, Kilometers(l));
  // Half of the Bell states, Alice's photon and the local photon both
  // detected, the partner detected at Bob; each leg carries half the fiber.
  const double t = std::pow(10.0, -0.2 * l / 2.0 / 10.0);
  const double p1 = 0.02 / 1.02;
  EXPECT_NEAR(r.signal_prob, 0.5 * t * p1 * 0.1 * 0.1 * t * 0.1, 1e-12 * r.signal_prob);
}

TEST(LinkBudget, RelaysExtendReach) {
  for (double dark : {1e-7, 1e-6, 1e-5}) {
    LinkParams p;
    p.detector.dark_prob_per_ns = dark;
    const double direct = max_distance(kDirect, p).km;
    EXPECT_GT(max_distance(kFoldedLossless, p).km, direct) << dark;
    EXPECT_GT(max_distance(kStandard, p).km, max_distance(kFoldedLossless, p).km) << dark;
  }
}

TEST(LinkBudget, ChipLossCostsRateAtZeroDistance) {
  LinkParams p;
  LinkModel chip{LinkVariant::folded_relay, 0.5, Decibels(9.0), ""};
  EXPECT_LT(link_rates(chip, p, Kilometers(0.0)).normalized_rate, 1.0);
  LinkModel lossless = chip;
  lossless.chip_insertion_loss = Decibels(0.0);
  EXPECT_LT(link_rates(chip, p, Kilometers(50.0)).signal_prob,
            link_rates(lossless, p, Kilometers(50.0)).signal_prob);
}

TEST(LinkBudget, PulseRateDoesNotChangeReach) {
  LinkParams a, b;
  b.pulse_rate = Hertz(1e9);
  for (const auto& m : comparison_models(Decibels(9.0))) {
    EXPECT_DOUBLE_EQ(max_distance(m, a).km, max_distance(m, b).km);
  }
}

TEST(LinkBudget, OptimizedPositionBeatsMidpoint) {
  const LinkParams p;
  LinkModel mid = kFoldedLossless;
  mid.relay_position = 0.5;
  const auto best = link_rates(kFoldedLossless, p, Kilometers(300.0));
  const auto half = link_rates(mid, p, Kilometers(300.0));
  EXPECT_GE(best.snr(), half.snr() * (1.0 - 1e-9));
  EXPECT_GT(best.relay_position, 0.0);
  EXPECT_LT(best.relay_position, 1.0);
}

TEST(LinkBudget, UnboundedWithoutDarkCounts) {
  LinkParams p;
  p.detector.dark_prob_per_ns = 0.0;
  const auto m = max_distance(kDirect, p);
  EXPECT_TRUE(m.unbounded);
  EXPECT_DOUBLE_EQ(m.km, 1e4);
}

TEST(LinkBudget, InvalidInputsThrow) {
  LinkParams p;
  p.teleport_fidelity = 0.3;
  EXPECT_THROW(link_rates(kDirect, p, Kilometers(1.0)), DomainError);
  p = {};
  p.fiber_loss_db_per_km = -0.1;
  EXPECT_THROW(max_distance(kDirect, p), DomainError);
  p = {};
  LinkModel bad = kStandard;
  bad.relay_position = 1.5;
  EXPECT_THROW(link_rates(bad, p, Kilometers(1.0)), DomainError);
  EXPECT_THROW(link_rates(kDirect, p, Kilometers(-1.0)), DomainError);
  p.mean_photon_per_pulse = 20.0;
  EXPECT_THROW(link_rates(kDirect, p, Kilometers(1.0)), DomainError);
  EXPECT_THROW(sweep({}, LinkParams{}, std::vector<double>{1.0}), DomainError);
}

TEST(LinkBudget, SweepShapesAndGains) {
  const LinkParams p;
  const auto models = comparison_models(Decibels(9.0));
  const std::vector<double> km{0.0, 100.0, 200.0};
  const auto s = sweep(models, p, km);
  ASSERT_EQ(s.model_names.size(), 4u);
  EXPECT_EQ(s.model_names[0], "direct");
  EXPECT_EQ(s.model_names[3], "folded_relay_chip");
  ASSERT_EQ(s.normalized_rate.size(), 4u);
  for (const auto& col : s.normalized_rate) EXPECT_EQ(col.size(), 3u);
  EXPECT_DOUBLE_EQ(s.normalized_rate[0][0], 1.0);
  EXPECT_DOUBLE_EQ(s.distance_gain[0], 1.0);
  EXPECT_DOUBLE_EQ(s.midpoint_reach[0].km, s.reach[0].km);
  for (std::size_t i = 1; i < 4; ++i) {
    EXPECT_GE(s.reach[i].km + 0.1, s.midpoint_reach[i].km);
    EXPECT_NEAR(s.distance_gain[i], s.reach[i].km / s.reach[0].km, 1e-12);
  }
}
