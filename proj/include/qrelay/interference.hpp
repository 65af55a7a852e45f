#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qrelay/photon_statistics.hpp"
#include "qrelay/units.hpp"

namespace qrelay {

/// HOM visibility split into its multi-pair and timing-jitter factors.
struct VisibilityBreakdown {
  double v_statistics = 0.0;
  double v_timing = 0.0;
  double v_total = 0.0;
};

/// Upper bound set by the arrival-time uncertainty relative to the coherence
/// time: 1 / sqrt((tau_uncert / tau_c)^2 + 1).
double v_timing(Picoseconds tau_uncert, Picoseconds tau_c);

struct CoincidenceBounds {
  /// Coincidence probability inside the dip (photons indistinguishable).
  double p_min = 0.0;
  /// Coincidence probability outside the dip.
  double p_max = 0.0;
};

/// Low-photon-number coincidence probabilities from the input-arm pmfs:
///   p_min = P0a P2b + P2a P0b,  p_max = P1a P1b + p_min.
CoincidenceBounds p_coincidence_bounds(const PhotonNumberDistribution& arm_a,
                                       const PhotonNumberDistribution& arm_b);

/// (p_max - p_min) / p_max; throws UndefinedVisibilityError when p_max = 0.
double v_statistics(const PhotonNumberDistribution& arm_a,
                    const PhotonNumberDistribution& arm_b);

VisibilityBreakdown visibility_breakdown(const PhotonNumberDistribution& arm_a,
                                         const PhotonNumberDistribution& arm_b,
                                         Picoseconds tau_uncert, Picoseconds tau_c);

struct VisibilityMapOptions {
  /// Heralding applied to source a (Alice); none means free-running thermal.
  std::optional<HeraldModel> herald_a;
  /// Heralding applied to source b (on-chip).
  std::optional<HeraldModel> herald_b;
};

struct VisibilityMapEntry {
  double n_a = 0.0;
  double n_b = 0.0;
  double visibility = 0.0;
};

/// v_statistics over the grid, N_a outer and N_b inner, both thermal.
std::vector<VisibilityMapEntry> visibility_map(std::span<const double> grid_na,
                                               std::span<const double> grid_nb,
                                               const VisibilityMapOptions& options);

struct DipSample {
  double position_mm = 0.0;
  double rate = 0.0;
  double error = 0.0;
};

/// Gaussian dip fitted to rate(x) = baseline (1 - V exp(-4 ln2 ((x - x0)/w)^2)).
struct DipFit {
  double visibility = 0.0;
  double visibility_error = 0.0;
  double fwhm_mm = 0.0;
  double fwhm_error_mm = 0.0;
  double baseline = 0.0;
  double baseline_error = 0.0;
  double center_mm = 0.0;
  double chi2 = 0.0;
  int degrees_of_freedom = 0;
};

struct DipProfile {
  std::vector<DipSample> samples;
  std::optional<DipFit> fit;
  /// Why `fit` is empty, if it is.
  std::string fit_failure;
};

/// Weighted least-squares gaussian fit (Levenberg-Marquardt). Samples with a
/// zero error are weighted like the smallest non-zero error in the set.
DipProfile fit_dip(std::vector<DipSample> samples);

/// Noise-free dip sampled at `positions_mm` with a gaussian of path FWHM
/// c * tau_fwhm, and its re-fit.
DipProfile dip_profile(double v_total, Picoseconds tau_fwhm, double baseline,
                       std::span<const double> positions_mm);

}  // namespace qrelay
