#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qrelay/photon_statistics.hpp"
#include "qrelay/units.hpp"

namespace qrelay {

// ---------------------------------------------------------------------------
// Electro-optic directional coupler

/// Two-waveguide coupled-mode model with detuning linear in the applied
/// voltage: delta * L = gamma * V. The cross-port power fraction is
///   T(V) = k^2 / (k^2 + g^2) * sin^2(sqrt(k^2 + g^2)),  k = kappa*L, g = gamma*V.
struct CouplerModel {
  double coupling_strength_times_length = std::numbers::pi / 2.0;  // rad
  double detuning_per_volt = 0.0;                                  // rad / V
  Millimeters interaction_length{9.0};
  /// False when no anchor away from 0 V constrained the detuning slope.
  bool detuning_constrained = false;
  /// Root-mean-square anchor residual of the calibration fit.
  double fit_residual = 0.0;

  double cross_ratio(Volts v) const;
  double bar_ratio(Volts v) const { return 1.0 - cross_ratio(v); }
  /// delta*L / kappa*L at the given voltage.
  double detuning_ratio(Volts v) const;
};

double coupler_ratio(const CouplerModel& model, Volts voltage);

struct CalibrationAnchor {
  Volts voltage;
  double cross_ratio;
};

struct CalibrationOptions {
  /// Also fit kappa*L (first lobe, (0, pi/2]); otherwise it stays fixed.
  bool fit_coupling_strength = false;
  double coupling_strength_times_length = std::numbers::pi / 2.0;
  Millimeters interaction_length{9.0};
};

/// Full transfer at 0 V and a balanced split at 30 V.
std::vector<CalibrationAnchor> default_coupler_anchors();

/// Least-squares fit of the detuning slope (and optionally kappa*L) on the
/// first monotone lobe of T(V). Throws CalibrationError for anchors the model
/// family cannot reach.
CouplerModel calibrate_coupler(std::span<const CalibrationAnchor> anchors,
                               const CalibrationOptions& options = {});

/// Parses a CSV with header `voltage_V,cross_ratio`.
std::vector<CalibrationAnchor> read_anchor_csv(std::istream& in);

// ---------------------------------------------------------------------------
// Sources, filters, detectors

struct SpdcSource {
  SpectralMode spectrum{Nanometers(1532.0), Picometers(80000.0), Lineshape::sinc_squared};
  double pairs_per_mw = 0.0;
  Milliwatts pump_power{0.0};
  DistributionFamily statistics = DistributionFamily::thermal;
  /// Pair-number pmf used when `statistics` is custom; the pump then only
  /// matters for reporting.
  std::vector<double> custom_pmf;

  double mean_pairs() const { return pairs_per_mw * pump_power.value(); }
  PhotonNumberDistribution pair_distribution() const;
};

/// Envelope of the emitted spectrum normalized to 1 at the center.
double spdc_spectral_density(const SpdcSource& source, Nanometers wavelength);
/// Batch form over a wavelength grid (nm).
void spdc_spectral_density(const SpdcSource& source, std::span<const double> wavelengths_nm,
                           std::span<double> out);

/// Ideal rectangular band-pass with a flat insertion loss.
struct Filter {
  Nanometers center{1530.0};
  Picometers fwhm{200.0};
  Decibels insertion_loss{0.0};

  double transmission(Nanometers wavelength) const;
  double in_band_transmission() const { return transmission_from_db(insertion_loss); }
  /// Spectral mode of light filtered by this band (gaussian time-bandwidth).
  SpectralMode filtered_mode() const {
    return SpectralMode(center, fwhm, Lineshape::gaussian);
  }
};

/// Fraction of the emitted spectrum that falls inside the filter band,
/// including the filter's insertion loss.
double filter_overlap(const SpdcSource& source, const Filter& filter);

struct DetectorModel {
  double efficiency = 0.10;
  double dark_prob_per_ns = 1e-5;
  Nanoseconds gate_window{1.0};

  /// 1 - (1 - p_ns)^window.
  double dark_prob_per_gate() const;
  void validate() const;
};

/// 1 - (1 - eta)^n (1 - p_dark_gate).
double detector_click_prob(const DetectorModel& model, std::size_t incident_photons);

// ---------------------------------------------------------------------------
// Loss elements and the chip graph

struct LossElement {
  std::string name;
  std::optional<Decibels> loss;

  /// Throws ConfigError if the loss was never set.
  Decibels required_loss() const;
  double transmission() const { return transmission_from_db(required_loss()); }
};

/// Binomial thinning: every photon survives independently with probability t.
PhotonNumberDistribution apply_transmission(const PhotonNumberDistribution& dist,
                                            double transmission);

enum class NodeKind { input_port, output_port, source, coupler, waveguide };

struct ChipSegment {
  std::string from;
  std::string to;
  LossElement element;
};

/// Directed graph of chip elements with a loss element on every segment.
class ChipLayout {
 public:
  void add_node(const std::string& id, NodeKind kind);
  void add_segment(const std::string& from, const std::string& to, LossElement element);

  const std::map<std::string, NodeKind>& nodes() const { return nodes_; }
  const std::vector<ChipSegment>& segments() const { return segments_; }
  std::vector<ChipSegment>& segments() { return segments_; }

  /// Measured fiber-to-fiber loss that overrides the segment sum.
  std::optional<Decibels> measured_insertion_loss;

  /// Acyclic, every segment loss set, output ports are sinks, every other
  /// node reachable from an input continues towards at least one output.
  void validate() const;

  /// Sum of segment losses along the unique path from `from` to `to`.
  Decibels path_loss(const std::string& from, const std::string& to) const;
  std::vector<std::string> path(const std::string& from, const std::string& to) const;

  /// Segment losses rescaled so the reference path matches the measured
  /// override; identity when no override is set.
  ChipLayout calibrated_to_measurement() const;

  /// Two couplers, the pair source and three output ports; 3 dB per facet and
  /// 2.5 dB of propagation along any input-to-output path.
  static ChipLayout relay_chip();

  static constexpr const char* kAlicePort = "port_1";
  static constexpr const char* kPumpPort = "port_2";
  static constexpr const char* kSource = "spdc";
  static constexpr const char* kRouter = "c1";
  static constexpr const char* kBellCoupler = "c2";
  static constexpr const char* kPortA = "port_a";
  static constexpr const char* kPortB = "port_b";
  static constexpr const char* kPortC = "port_c";

 private:
  std::map<std::string, NodeKind> nodes_;
  std::vector<ChipSegment> segments_;
};

/// Fiber-to-fiber loss from Alice's port to port A: the measured override when
/// present, otherwise the sum of segment losses.
Decibels chip_insertion_loss(const ChipLayout& layout);

}  // namespace qrelay
