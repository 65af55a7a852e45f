#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qrelay/interference.hpp"
#include "qrelay/link_budget.hpp"
#include "qrelay/montecarlo.hpp"
#include "qrelay/optics.hpp"

namespace qrelay {

inline constexpr int kSchemaVersion = 1;

/// Inclusive evenly spaced grid; values are start + i * step.
struct Grid {
  double start = 0.0;
  double stop = 0.0;
  double step = 1.0;

  std::vector<double> values() const;
};

struct CouplerConfig {
  CalibrationOptions options;
  std::vector<CalibrationAnchor> anchors = default_coupler_anchors();
  Volts operating_voltage{30.0};
};

/// Everything a CLI invocation needs. Unknown keys are rejected; keys left
/// out keep the value of the layer underneath (defaults, then preset).
struct ScenarioConfig {
  /// Monte Carlo scenario. Its two coupler models are produced from
  /// `router` and `bell` by `build_scenario`.
  Scenario scenario;
  CouplerConfig router;
  CouplerConfig bell;

  LinkParams link;
  DistanceCriterion criterion;
  Grid distances_km{0.0, 600.0, 5.0};

  Grid map_n_a{0.005, 0.1, 0.005};
  Grid map_n_b{0.005, 0.1, 0.005};
  VisibilityMapOptions map_options{std::nullopt, HeraldModel{0.0, 0.0}};

  Grid spectrum_nm{1480.0, 1590.0, 0.5};
  Grid coupler_voltage_V{0.0, 60.0, 0.5};
  Grid dip_positions_mm{-15.0, 15.0, 0.5};

  /// Laser pulses for mc-run, and per position for hom-dip.
  std::uint64_t pulses = 10'000'000;
};

/// Layers `text` over `base`. Throws ConfigError for malformed documents,
/// wrong types, unknown keys or an unsupported schema_version.
ScenarioConfig parse_config(std::string_view text, const ScenarioConfig& base = {});

/// Complete document (every key present), stable key order.
std::string serialize_config(const ScenarioConfig& config);

/// Scenario with both couplers calibrated from their anchors.
Scenario build_scenario(const ScenarioConfig& config);

/// Names accepted by `preset_text`.
const std::vector<std::string>& preset_names();
/// Committed preset document; throws ConfigError for an unknown name.
std::string_view preset_text(std::string_view name);

}  // namespace qrelay
