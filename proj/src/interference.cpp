#include "qrelay/interference.hpp"

#include <algorithm>
#include <cmath>

#include "qrelay/errors.hpp"
#include "qrelay/simd/kernels.hpp"

namespace qrelay {

double v_timing(Picoseconds tau_uncert, Picoseconds tau_c) {
  if (!(tau_c.value() > 0.0)) throw DomainError("coherence time must be positive");
  if (!(tau_uncert.value() >= 0.0)) throw DomainError("timing uncertainty must be non-negative");
  const double ratio = tau_uncert / tau_c;
  return 1.0 / std::sqrt(ratio * ratio + 1.0);
}

CoincidenceBounds p_coincidence_bounds(const PhotonNumberDistribution& a,
                                       const PhotonNumberDistribution& b) {
  CoincidenceBounds out;
  out.p_min = a[0] * b[2] + a[2] * b[0];
  out.p_max = a[1] * b[1] + out.p_min;
  return out;
}

double v_statistics(const PhotonNumberDistribution& a, const PhotonNumberDistribution& b) {
  const auto bounds = p_coincidence_bounds(a, b);
  if (!(bounds.p_max > 0.0)) {
    throw UndefinedVisibilityError("out-of-dip coincidence probability is zero");
  }
  return std::clamp((bounds.p_max - bounds.p_min) / bounds.p_max, 0.0, 1.0);
}

VisibilityBreakdown visibility_breakdown(const PhotonNumberDistribution& a,
                                         const PhotonNumberDistribution& b,
                                         Picoseconds tau_uncert, Picoseconds tau_c) {
  VisibilityBreakdown out;
  out.v_statistics = v_statistics(a, b);
  out.v_timing = v_timing(tau_uncert, tau_c);
  out.v_total = out.v_statistics * out.v_timing;
  return out;
}

std::vector<VisibilityMapEntry> visibility_map(std::span<const double> grid_na,
                                               std::span<const double> grid_nb,
                                               const VisibilityMapOptions& options) {
  if (grid_na.empty() || grid_nb.empty()) throw DomainError("visibility map grids must be non-empty");
  auto arm = [](double n, const std::optional<HeraldModel>& herald) {
    auto dist = thermal(n);
    return herald ? herald_condition(dist, *herald) : dist;
  };
  std::vector<PhotonNumberDistribution> arms_b;
  arms_b.reserve(grid_nb.size());
  for (double nb : grid_nb) arms_b.push_back(arm(nb, options.herald_b));

  std::vector<VisibilityMapEntry> out;
  out.reserve(grid_na.size() * grid_nb.size());
  for (double na : grid_na) {
    const auto arm_a = arm(na, options.herald_a);
    for (std::size_t j = 0; j < grid_nb.size(); ++j) {
      out.push_back({na, grid_nb[j], v_statistics(arm_a, arms_b[j])});
    }
  }
  return out;
}

DipProfile dip_profile(double v_total, Picoseconds tau_fwhm, double baseline,
                       std::span<const double> positions_mm) {
  if (!(v_total >= 0.0 && v_total <= 1.0)) throw DomainError("visibility must lie in [0, 1]");
  if (!(tau_fwhm.value() > 0.0)) throw DomainError("dip width must be positive");
  const double fwhm_mm = delay_to_path(tau_fwhm).value();
  std::vector<double> shape(positions_mm.size());
  simd::gaussian_profile(positions_mm, 0.0, fwhm_mm, shape);
  std::vector<DipSample> samples(positions_mm.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    samples[i] = {positions_mm[i], baseline * (1.0 - v_total * shape[i]), 0.0};
  }
  return fit_dip(std::move(samples));
}

}  // namespace qrelay
