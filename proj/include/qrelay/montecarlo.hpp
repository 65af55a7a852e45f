#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qrelay/interference.hpp"
#include "qrelay/optics.hpp"
#include "qrelay/units.hpp"

namespace qrelay {

/// External source + relay chip + three gated detectors (and a monitor on the
/// external source's unused partner photon).
struct Scenario {
  Hertz repetition_rate{76e6};
  Hertz gating_rate{600e3};
  /// Pump pulse duration; sets the arrival-time uncertainty of both photons.
  Picoseconds pump_duration{2.5};

  SpdcSource external_source;
  SpdcSource chip_source;
  /// Loss between the external source and the chip's Alice port.
  Decibels external_link_loss{0.0};

  /// Bands in front of D_a, D_b (1530 nm, 200 pm) and D_c (1534 nm, 800 pm).
  Filter filter_a{Nanometers(1530.0), Picometers(200.0), Decibels(0.0)};
  Filter filter_b{Nanometers(1530.0), Picometers(200.0), Decibels(0.0)};
  Filter filter_c{Nanometers(1534.0), Picometers(800.0), Decibels(0.0)};

  ChipLayout chip = ChipLayout::relay_chip();
  /// C1 splits the on-chip pair, C2 performs the Bell-state measurement.
  CouplerModel router;
  Volts router_voltage{30.0};
  CouplerModel bell_coupler;
  Volts bell_voltage{30.0};

  DetectorModel detector_a;
  DetectorModel detector_b;
  DetectorModel detector_c;
  std::optional<DetectorModel> monitor;
  Decibels monitor_loss{0.0};

  /// Path-length mismatch between the two photons arriving at C2.
  Millimeters delay{0.0};
  /// Intensity FWHM of the dip in delay units.
  Picoseconds dip_fwhm{20.0};

  /// Throws ConfigError before any sampling.
  void validate() const;
};

/// Per-pulse probabilities derived from a scenario; what the sampler and the
/// expected-count engine both consume.
struct ScenarioProbabilities {
  double gate_probability = 0.0;
  std::vector<double> external_pmf;
  std::vector<double> chip_pmf;
  /// External photon reaching C2.
  double alice_to_bell = 0.0;
  /// External partner photon reaching, and registered by, the monitor.
  double monitor_transmission = 0.0;
  double monitor_detect = 0.0;
  double monitor_dark = 0.0;
  /// Chip 1530 nm photon routed up at C1 and reaching C2.
  double chip_to_bell = 0.0;
  /// Chip 1534 nm photon routed down at C1 and reaching D_c's fiber.
  double chip_to_herald = 0.0;
  double bell_cross = 0.5;
  /// Transmission from C2 to D_a / D_b including the filter.
  double out_a = 1.0;
  double out_b = 1.0;
  std::array<double, 3> efficiency{};
  std::array<double, 3> dark{};
  /// Temporal-mode overlap at the scenario delay (timing bound included).
  double overlap = 0.0;
  double timing_visibility = 1.0;
};

ScenarioProbabilities scenario_probabilities(const Scenario& scenario);

/// Overlap of the two photons' temporal modes at delay `delay`:
/// v_timing * exp(-4 ln2 (delay / (c tau_fwhm))^2).
double mode_overlap(Millimeters delay, Picoseconds dip_fwhm, double timing_visibility);

/// Detector indices.
enum Detector : std::size_t { kDetA = 0, kDetB = 1, kDetC = 2 };

template <class T>
struct CoincidenceTally {
  std::array<T, 3> singles{};
  T ab{};
  T ac{};
  T bc{};
  T abc{};

  CoincidenceTally& operator+=(const CoincidenceTally& o) {
    for (std::size_t i = 0; i < 3; ++i) singles[i] += o.singles[i];
    ab += o.ab;
    ac += o.ac;
    bc += o.bc;
    abc += o.abc;
    return *this;
  }
  bool operator==(const CoincidenceTally&) const = default;
};

struct PhotonTally {
  std::uint64_t generated = 0;
  std::uint64_t detected = 0;
  std::uint64_t lost = 0;
  std::uint64_t undetected = 0;

  PhotonTally& operator+=(const PhotonTally& o) {
    generated += o.generated;
    detected += o.detected;
    lost += o.lost;
    undetected += o.undetected;
    return *this;
  }
  bool operator==(const PhotonTally&) const = default;
};

struct Estimate {
  double value = 0.0;
  double error = 0.0;
  bool operator==(const Estimate&) const = default;
};

struct NetThreefold {
  double raw = 0.0;
  double accidental = 0.0;
  double accidental_error = 0.0;
  double net = 0.0;
  double net_error = 0.0;
  bool operator==(const NetThreefold&) const = default;
};

/// Outcome of one run. Counts are tallied twice from the same random draws:
/// once with the photons overlapping as set by the delay and once with them
/// fully distinguishable (the out-of-dip reference).
struct CountsReport {
  std::uint64_t pulses_simulated = 0;
  std::uint64_t gated_pulses = 0;
  CoincidenceTally<std::uint64_t> at_delay;
  CoincidenceTally<std::uint64_t> reference;
  std::uint64_t monitor_singles = 0;
  PhotonTally photons_at_delay;
  PhotonTally photons_reference;

  double delay_mm = 0.0;
  double overlap = 0.0;
  std::array<double, 3> dark_probability{};

  NetThreefold net_at_delay;
  NetThreefold net_reference;
  Estimate raw_visibility;
  Estimate net_visibility;
  /// v_statistics of the arm distributions at C2 times the timing bound.
  double analytic_visibility = 0.0;

  bool operator==(const CountsReport&) const = default;
};

struct RunOptions {
  /// 0 = hardware concurrency.
  unsigned workers = 0;
};

/// Simulates `n_pulses` laser pulses; only the gated ones are sampled.
/// Bit-identical for a given (scenario, n_pulses, seed) whatever `workers` is.
CountsReport run(const Scenario& scenario, std::uint64_t n_pulses, std::uint64_t seed,
                 const RunOptions& options = {});

/// Per-gated-pulse expectation of every tally, by exact enumeration of the
/// sampling model.
struct ExpectedCounts {
  CoincidenceTally<double> at_delay;
  CoincidenceTally<double> reference;
  double monitor_singles = 0.0;
  double gate_probability = 0.0;
  double overlap = 0.0;
  std::array<double, 3> dark_probability{};
};

ExpectedCounts expected_counts(const Scenario& scenario);

/// Accidental three-folds implied by the singles and two-folds under
/// independence of dark counts and photon clicks. `gates` scales rates to
/// counts; tallies may be counts (gates = number of gated pulses) or per-gate
/// probabilities (gates = 1).
NetThreefold subtract_accidentals(const CoincidenceTally<double>& tally, double gates,
                                  const std::array<double, 3>& dark_probability,
                                  bool poisson_errors);

/// Fills `net_*`, `raw_visibility` and `net_visibility` from the tallies.
void subtract_accidentals(CountsReport& report);

/// Visibility of the predicted scenario: v_statistics of the two arms at C2,
/// with the chip arm conditioned on the D_c herald, times the timing bound.
double predicted_visibility(const Scenario& scenario);

struct DipScanPoint {
  double position_mm = 0.0;
  /// Empty in analytic mode.
  std::optional<CountsReport> report;
  NetThreefold threefold;
};

struct DipScan {
  std::vector<DipScanPoint> points;
  /// Net three-fold rate per gated pulse against position.
  DipProfile profile;
};

/// One run per position (`n_pulses_per_point` laser pulses each). With
/// n_pulses_per_point = 0 the expected counts are used instead of sampling.
DipScan scan_dip(const Scenario& scenario, std::span<const double> positions_mm,
                 std::uint64_t n_pulses_per_point, std::uint64_t seed,
                 const RunOptions& options = {});

}  // namespace qrelay
