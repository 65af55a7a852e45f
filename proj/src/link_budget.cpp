#include "qrelay/link_budget.hpp"

#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <limits>

#include "qrelay/errors.hpp"

namespace qrelay {

namespace {

constexpr double kSearchLimitKm = 1e4;
constexpr double kDistanceTolKm = 0.1;
constexpr double kPositionEdge = 1e-9;

// Linear-optics Bell measurement identifies two of the four Bell states.
constexpr double kBellEfficiency = 0.5;

double fraction_db(double db) { return std::pow(10.0, -db / 10.0); }

struct ChipShares {
  double alice = 1.0;  // port 1 -> C2 -> port A/B
  double pair_bell = 1.0;  // source -> C1 -> C2 -> port A/B
  double pair_out = 1.0;  // source -> C1 -> port C
};

// Chip loss split in the ratios of the default layout's paths.
ChipShares chip_shares(Decibels insertion_loss) {
  static const auto ratios = [] {
    const auto chip = ChipLayout::relay_chip();
    const double ref = chip.path_loss(ChipLayout::kAlicePort, ChipLayout::kPortA).value();
    return std::array<double, 2>{
        chip.path_loss(ChipLayout::kSource, ChipLayout::kPortA).value() / ref,
        chip.path_loss(ChipLayout::kSource, ChipLayout::kPortC).value() / ref};
  }();
  const double l = insertion_loss.value();
  return {fraction_db(l), fraction_db(l * ratios[0]), fraction_db(l * ratios[1])};
}

struct Probabilities {
  double signal = 0.0;
  double accidental = 0.0;
};

Probabilities direct_probabilities(const LinkParams& p, double distance_km) {
  const double t = fraction_db(p.fiber_loss_db_per_km * distance_km);
  return {p.mean_photon_per_pulse * p.detector.efficiency * t, p.detector.dark_prob_per_gate()};
}

// Relay at fraction x of the total length. Alice's photon crosses the first
// leg, meets one photon of a local pair at the Bell coupler, and the herald
// gates Bob's detector at the end of the second leg, which the partner photon
// travels.
Probabilities relay_probabilities(const LinkParams& p, LinkVariant variant, double chip_loss_db,
                                  double distance_km, double x) {
  const double eta = p.detector.efficiency;
  const double d = p.detector.dark_prob_per_gate();
  const double t1 = fraction_db(p.fiber_loss_db_per_km * distance_km * x);
  const double t2 = fraction_db(p.fiber_loss_db_per_km * distance_km * (1.0 - x));

  // The folded relay splits its pair on a balanced coupler, so each photon is
  // on the right path half the time; a standard relay separates them
  // deterministically and has no chip.
  const bool folded = variant == LinkVariant::folded_relay;
  const double route = folded ? 0.5 : 1.0;
  const ChipShares chip = chip_shares(Decibels(folded ? chip_loss_db : 0.0));

  const double p1 = p.local_pair_mean / (1.0 + p.local_pair_mean);
  const double arrival = p.mean_photon_per_pulse * t1 * chip.alice;
  const double local = p1 * route * chip.pair_bell;
  const double partner = route * chip.pair_out * t2 * eta;

  const double true_herald = kBellEfficiency * arrival * local * eta * eta;
  const double photon_dark_a = arrival * eta * d;
  const double photon_dark_b = local * eta * d;
  const double dark_dark = d * d;
  double multipair = 0.0;
  if (p.include_multipair) {
    const double p2 = p1 * p1;
    multipair = kBellEfficiency * p2 * std::pow(route * chip.pair_bell, 2) * eta * eta;
  }

  Probabilities out;
  out.signal = true_herald * partner;
  // Any herald with a dark count at Bob, plus photon+dark heralds where the
  // local partner photon is detected.
  out.accidental = (true_herald + photon_dark_a + photon_dark_b + dark_dark + multipair) * d +
                   photon_dark_b * partner + 2.0 * multipair * partner;
  return out;
}

Probabilities probabilities(const LinkModel& m, const LinkParams& p, double distance_km,
                            double x) {
  if (m.variant == LinkVariant::direct) return direct_probabilities(p, distance_km);
  const double chip = m.chip_insertion_loss.value_or(p.chip_insertion_loss).value();
  return relay_probabilities(p, m.variant, chip, distance_km, x);
}

double snr_of(const Probabilities& pr) {
  return pr.accidental > 0.0 ? pr.signal / pr.accidental
                             : std::numeric_limits<double>::infinity();
}

// Position maximizing signal / accidental at one distance.
double best_position(const LinkModel& m, const LinkParams& p, double distance_km) {
  if (m.variant == LinkVariant::direct) return 0.0;
  if (m.relay_position) return *m.relay_position;
  auto cost = [&](double x) { return -std::log(snr_of(probabilities(m, p, distance_km, x))); };
  const auto r = boost::math::tools::brent_find_minima(cost, kPositionEdge, 1.0 - kPositionEdge,
                                                       std::numeric_limits<double>::digits / 2);
  return r.first;
}

double qber_of(const Probabilities& pr, double intrinsic_error) {
  const double total = pr.signal + pr.accidental;
  if (!(total > 0.0)) return 0.5;
  return (0.5 * pr.accidental + intrinsic_error * pr.signal) / total;
}

double intrinsic_error(const LinkModel& m, const LinkParams& p) {
  return m.variant == LinkVariant::direct ? 0.0 : (1.0 - p.teleport_fidelity) / 2.0;
}

bool criterion_holds(const Probabilities& pr, const DistanceCriterion& c, double e) {
  if (c.kind == DistanceCriterion::Kind::snr_unity) return snr_of(pr) >= 1.0;
  return qber_of(pr, e) <= c.qber_limit;
}

void validate_model(const LinkModel& m) {
  if (m.relay_position && !(*m.relay_position > 0.0 && *m.relay_position < 1.0)) {
    throw DomainError("relay position must lie strictly between 0 and 1");
  }
  if (m.chip_insertion_loss && !(m.chip_insertion_loss->value() >= 0.0)) {
    throw DomainError("chip insertion loss must be non-negative");
  }
}

}  // namespace

const char* variant_name(LinkVariant v) {
  switch (v) {
    case LinkVariant::direct: return "direct";
    case LinkVariant::standard_relay: return "standard_relay";
    case LinkVariant::folded_relay: return "folded_relay";
  }
  return "unknown";
}

void LinkParams::validate() const {
  if (!(fiber_loss_db_per_km >= 0.0)) throw DomainError("fiber loss must be non-negative");
  if (!(teleport_fidelity >= 0.5 && teleport_fidelity <= 1.0)) {
    throw DomainError("teleportation fidelity must lie in [0.5, 1]");
  }
  if (!(mean_photon_per_pulse >= 0.0)) throw DomainError("mean photon number must be non-negative");
  if (!(local_pair_mean >= 0.0)) throw DomainError("local pair mean must be non-negative");
  if (!(pulse_rate.value() > 0.0)) throw DomainError("pulse rate must be positive");
  if (!(chip_insertion_loss.value() >= 0.0)) throw DomainError("chip loss must be non-negative");
  detector.validate();
  // Probabilities that enter the formulas must stay probabilities.
  const double p1 = local_pair_mean / (1.0 + local_pair_mean);
  if (mean_photon_per_pulse * detector.efficiency > 1.0 || p1 > 1.0) {
    throw DomainError("link parameters give a detection probability above 1");
  }
}

LinkRates link_rates(const LinkModel& model, const LinkParams& params, Kilometers distance) {
  params.validate();
  validate_model(model);
  if (!(distance.value() >= 0.0)) throw DomainError("distance must be non-negative");
  LinkRates out;
  out.relay_position = best_position(model, params, distance.value());
  const auto pr = probabilities(model, params, distance.value(), out.relay_position);
  out.signal_prob = pr.signal;
  out.accidental_prob = pr.accidental;
  out.qber = qber_of(pr, intrinsic_error(model, params));
  const auto anchor = direct_probabilities(params, 0.0);
  out.normalized_rate = (pr.signal + pr.accidental) / (anchor.signal + anchor.accidental);
  return out;
}

MaxDistance max_distance(const LinkModel& model, const LinkParams& params,
                         const DistanceCriterion& criterion) {
  params.validate();
  validate_model(model);
  const double e = intrinsic_error(model, params);
  auto holds = [&](double km, double* position) {
    const double x = best_position(model, params, km);
    if (position) *position = x;
    return criterion_holds(probabilities(model, params, km, x), criterion, e);
  };
  MaxDistance out;
  if (holds(kSearchLimitKm, &out.relay_position)) {
    out.km = kSearchLimitKm;
    out.unbounded = true;
    return out;
  }
  if (!holds(0.0, &out.relay_position)) return out;
  double lo = 0.0;
  double hi = kSearchLimitKm;
  while (hi - lo > kDistanceTolKm / 2.0) {
    const double mid = 0.5 * (lo + hi);
    (holds(mid, nullptr) ? lo : hi) = mid;
  }
  out.km = 0.5 * (lo + hi);
  out.relay_position = best_position(model, params, out.km);
  return out;
}

std::vector<LinkModel> comparison_models(Decibels chip_loss) {
  return {
      {LinkVariant::direct, std::nullopt, std::nullopt, "direct"},
      {LinkVariant::standard_relay, std::nullopt, std::nullopt, "standard_relay"},
      {LinkVariant::folded_relay, std::nullopt, Decibels(0.0), "folded_relay_lossless"},
      {LinkVariant::folded_relay, std::nullopt, chip_loss, "folded_relay_chip"},
  };
}

SweepResult sweep(std::span<const LinkModel> models, const LinkParams& params,
                  std::span<const double> distances_km, const DistanceCriterion& criterion) {
  if (models.empty() || distances_km.empty()) {
    throw DomainError("sweep needs at least one model and one distance");
  }
  SweepResult out;
  out.distances_km.assign(distances_km.begin(), distances_km.end());
  double direct_reach = std::numeric_limits<double>::quiet_NaN();
  for (const auto& m : models) {
    out.model_names.push_back(m.name());
    const MaxDistance reach = max_distance(m, params, criterion);
    out.reach.push_back(reach);
    LinkModel fixed = m;
    if (m.variant != LinkVariant::direct && !m.relay_position) {
      fixed.relay_position = reach.relay_position;
    }
    LinkModel midpoint = m;
    if (m.variant != LinkVariant::direct) midpoint.relay_position = 0.5;
    out.midpoint_reach.push_back(max_distance(midpoint, params, criterion));
    if (m.variant == LinkVariant::direct && std::isnan(direct_reach)) direct_reach = reach.km;

    std::vector<double> column;
    column.reserve(distances_km.size());
    for (double km : distances_km) {
      column.push_back(link_rates(fixed, params, Kilometers(km)).normalized_rate);
    }
    out.normalized_rate.push_back(std::move(column));
  }
  for (const auto& r : out.reach) out.distance_gain.push_back(r.km / direct_reach);
  return out;
}

}  // namespace qrelay
