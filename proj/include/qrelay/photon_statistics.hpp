#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qrelay {

/// Default truncation point of a photon-number distribution.
inline constexpr std::size_t kDefaultMaxPhotons = 20;
/// Probability mass allowed to fall beyond the truncation point.
inline constexpr double kTruncationTolerance = 1e-12;

enum class DistributionFamily { thermal, poisson, conditional, custom };

/// Truncated probability mass function over the number of pairs (or photons)
/// per pump pulse. Entries beyond `max_photons()` are taken to be zero.
class PhotonNumberDistribution {
 public:
  /// Validates non-negativity and total mass in [1 - tolerance, 1 + tolerance].
  PhotonNumberDistribution(std::vector<double> pmf, DistributionFamily family,
                           double declared_mean);

  /// Wraps an arbitrary normalized pmf.
  static PhotonNumberDistribution custom(std::vector<double> pmf);

  /// P(n); zero outside the stored support.
  double operator[](std::size_t n) const { return n < pmf_.size() ? pmf_[n] : 0.0; }
  std::span<const double> pmf() const { return pmf_; }
  std::size_t max_photons() const { return pmf_.size() - 1; }
  DistributionFamily family() const { return family_; }

  /// Mean declared at construction (N for thermal/poisson constructors).
  double mean_pairs() const { return declared_mean_; }
  /// Mean recomputed from the stored pmf.
  double pmf_mean() const;
  double total_mass() const;

  /// Cumulative distribution, used for inverse-transform sampling.
  std::vector<double> cdf() const;

 private:
  std::vector<double> pmf_;
  DistributionFamily family_;
  double declared_mean_;
};

/// Single-mode SPDC statistics N^n / (1+N)^(n+1). The support is extended
/// beyond `max_photons` when needed to keep the tail below the tolerance.
PhotonNumberDistribution thermal(double mean_pairs,
                                 std::size_t max_photons = kDefaultMaxPhotons);

PhotonNumberDistribution poisson(double mean_pairs,
                                 std::size_t max_photons = kDefaultMaxPhotons);

/// Click statistics of the detector announcing the partner photon.
struct HeraldModel {
  /// End-to-end probability that one pair produces a herald click.
  double efficiency = 1.0;
  /// Dark click probability of the herald detector per gate.
  double dark_probability = 0.0;
};

/// Bayesian update of `dist` on a herald click:
///   P'(n) ~ P(n) [1 - (1 - eta)^n (1 - d)].
/// With eta = 0 and d = 0 the weak-herald limit P'(n) = n P(n) / <n> is
/// returned. Throws ConditioningError when the click probability vanishes.
PhotonNumberDistribution herald_condition(const PhotonNumberDistribution& dist,
                                          const HeraldModel& model);

/// Probability that the herald fires at all.
double herald_click_probability(const PhotonNumberDistribution& dist,
                                const HeraldModel& model);

}  // namespace qrelay
