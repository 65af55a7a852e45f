#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qrelay/optics.hpp"
#include "qrelay/units.hpp"

namespace qrelay {

struct LinkParams {
  double fiber_loss_db_per_km = 0.2;
  /// Used for Bob's detector and both Bell-measurement detectors.
  DetectorModel detector{0.10, 1e-6, Nanoseconds(1.0)};
  Hertz pulse_rate{76e6};
  /// Mean photon number of Alice's pulses.
  double mean_photon_per_pulse = 1.0;
  double teleport_fidelity = 0.8;
  /// Chip fiber-to-fiber loss; split over the three photon paths in
  /// proportion to the default chip layout.
  Decibels chip_insertion_loss{0.0};
  /// Mean pair number of the relay's own pair source.
  double local_pair_mean = 0.02;
  /// Count false heralds from two local pairs (off by default: the
  /// wavelength filters remove the same-arm pairs that would dominate them).
  bool include_multipair = false;

  void validate() const;
};

enum class LinkVariant { direct, standard_relay, folded_relay };

const char* variant_name(LinkVariant v);

struct LinkModel {
  LinkVariant variant = LinkVariant::direct;
  /// Relay node position as a fraction of the total length; optimized when unset.
  std::optional<double> relay_position;
  /// Overrides LinkParams::chip_insertion_loss for this model.
  std::optional<Decibels> chip_insertion_loss;
  /// Column label in sweep output; defaults to the variant name.
  std::string label;

  std::string name() const { return label.empty() ? variant_name(variant) : label; }
};

struct LinkRates {
  /// Per-pulse probability of a correct detection at Bob (heralded for relays).
  double signal_prob = 0.0;
  double accidental_prob = 0.0;
  double qber = 0.0;
  /// (signal + accidental) / direct link's value at zero distance.
  double normalized_rate = 0.0;
  /// Relay position used (0 for the direct link).
  double relay_position = 0.0;

  double snr() const {
    return accidental_prob > 0.0 ? signal_prob / accidental_prob
                                 : std::numeric_limits<double>::infinity();
  }
};

/// Rates at one distance. With the relay position unset, the position that
/// maximizes signal/accidental at this distance is used.
LinkRates link_rates(const LinkModel& model, const LinkParams& params, Kilometers distance);

struct DistanceCriterion {
  enum class Kind { snr_unity, qber_threshold } kind = Kind::snr_unity;
  double qber_limit = 0.11;

  static DistanceCriterion snr_unity() { return {}; }
  static DistanceCriterion qber_threshold(double q) { return {Kind::qber_threshold, q}; }
};

struct MaxDistance {
  double km = 0.0;
  /// The criterion still held at the 10^4 km search limit.
  bool unbounded = false;
  double relay_position = 0.0;
};

/// Smallest distance (to 0.1 km) at which the criterion fails.
MaxDistance max_distance(const LinkModel& model, const LinkParams& params,
                         const DistanceCriterion& criterion = {});

/// Direct link, standard relay, and the folded relay with a lossless chip and
/// with `chip_loss`.
std::vector<LinkModel> comparison_models(Decibels chip_loss);

struct SweepResult {
  std::vector<std::string> model_names;
  std::vector<double> distances_km;
  /// normalized_rate[model][distance]
  std::vector<std::vector<double>> normalized_rate;
  std::vector<MaxDistance> reach;
  /// Max distance with the relay fixed at the midpoint (direct: same as reach).
  std::vector<MaxDistance> midpoint_reach;
  /// reach / reach of the first direct model (NaN if none).
  std::vector<double> distance_gain;
};

/// Relay models without a fixed position use the position that maximizes
/// their reach, for every distance.
SweepResult sweep(std::span<const LinkModel> models, const LinkParams& params,
                  std::span<const double> distances_km,
                  const DistanceCriterion& criterion = {});

}  // namespace qrelay
