#include "qrelay/photon_statistics.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "qrelay/errors.hpp"

namespace qrelay {
namespace {

constexpr std::size_t kMaxSupport = 100000;

void require_mean(double mean_pairs) {
  if (!(mean_pairs >= 0.0) || !std::isfinite(mean_pairs)) {
    throw DomainError("mean pair number must be finite and non-negative, got " +
                      std::to_string(mean_pairs));
  }
}

// Probability that none of n photons is registered at efficiency eta.
double miss_probability(std::size_t n, double eta) {
  if (n == 0) return 1.0;
  if (eta >= 1.0) return 0.0;
  return std::exp(static_cast<double>(n) * std::log1p(-eta));
}

// Per-n click probability of the herald detector, computed so that tiny
// efficiencies do not lose precision.
double click_given_n(std::size_t n, const HeraldModel& m) {
  double detect = 0.0;
  if (n > 0) {
    detect = m.efficiency >= 1.0
                 ? 1.0
                 : -std::expm1(static_cast<double>(n) * std::log1p(-m.efficiency));
  }
  return detect + miss_probability(n, m.efficiency) * m.dark_probability;
}

void validate_herald(const HeraldModel& m) {
  if (!(m.efficiency >= 0.0 && m.efficiency <= 1.0)) {
    throw DomainError("herald efficiency must lie in [0, 1]");
  }
  if (!(m.dark_probability >= 0.0 && m.dark_probability <= 1.0)) {
    throw DomainError("herald dark probability must lie in [0, 1]");
  }
}

}  // namespace

PhotonNumberDistribution::PhotonNumberDistribution(std::vector<double> pmf,
                                                   DistributionFamily family,
                                                   double declared_mean)
    : pmf_(std::move(pmf)), family_(family), declared_mean_(declared_mean) {
  if (pmf_.empty()) throw DomainError("photon-number pmf must not be empty");
  for (double p : pmf_) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw DomainError("photon-number pmf entries must be finite and non-negative");
    }
  }
  const double mass = total_mass();
  if (mass < 1.0 - kTruncationTolerance || mass > 1.0 + kTruncationTolerance) {
    throw DomainError("photon-number pmf mass " + std::to_string(mass) +
                      " is not normalized");
  }
}

PhotonNumberDistribution PhotonNumberDistribution::custom(std::vector<double> pmf) {
  double mean = 0.0;
  for (std::size_t n = 0; n < pmf.size(); ++n) mean += static_cast<double>(n) * pmf[n];
  return PhotonNumberDistribution(std::move(pmf), DistributionFamily::custom, mean);
}

double PhotonNumberDistribution::pmf_mean() const {
  double mean = 0.0;
  for (std::size_t n = 0; n < pmf_.size(); ++n) mean += static_cast<double>(n) * pmf_[n];
  return mean;
}

double PhotonNumberDistribution::total_mass() const {
  return std::accumulate(pmf_.begin(), pmf_.end(), 0.0);
}

std::vector<double> PhotonNumberDistribution::cdf() const {
  std::vector<double> out(pmf_.size());
  std::partial_sum(pmf_.begin(), pmf_.end(), out.begin());
  return out;
}

PhotonNumberDistribution thermal(double mean_pairs, std::size_t max_photons) {
  require_mean(mean_pairs);
  const double ratio = mean_pairs / (1.0 + mean_pairs);
  // Tail beyond n_max is ratio^(n_max+1).
  std::size_t n_max = max_photons;
  while (n_max < kMaxSupport &&
         std::pow(ratio, static_cast<double>(n_max + 1)) > kTruncationTolerance) {
    n_max *= 2;
  }
  std::vector<double> pmf(n_max + 1);
  double term = 1.0 / (1.0 + mean_pairs);
  for (std::size_t n = 0; n <= n_max; ++n) {
    pmf[n] = term;
    term *= ratio;
  }
  return PhotonNumberDistribution(std::move(pmf), DistributionFamily::thermal, mean_pairs);
}

PhotonNumberDistribution poisson(double mean_pairs, std::size_t max_photons) {
  require_mean(mean_pairs);
  std::size_t n_max = max_photons;
  auto build = [&](std::size_t n_last) {
    std::vector<double> pmf(n_last + 1);
    double term = std::exp(-mean_pairs);
    for (std::size_t n = 0; n <= n_last; ++n) {
      pmf[n] = term;
      term *= mean_pairs / static_cast<double>(n + 1);
    }
    return pmf;
  };
  std::vector<double> pmf = build(n_max);
  while (n_max < kMaxSupport &&
         1.0 - std::accumulate(pmf.begin(), pmf.end(), 0.0) > kTruncationTolerance) {
    n_max *= 2;
    pmf = build(n_max);
  }
  return PhotonNumberDistribution(std::move(pmf), DistributionFamily::poisson, mean_pairs);
}

double herald_click_probability(const PhotonNumberDistribution& dist,
                                const HeraldModel& model) {
  validate_herald(model);
  double p = 0.0;
  for (std::size_t n = 0; n <= dist.max_photons(); ++n) p += dist[n] * click_given_n(n, model);
  return p;
}

PhotonNumberDistribution herald_condition(const PhotonNumberDistribution& dist,
                                          const HeraldModel& model) {
  validate_herald(model);
  std::vector<double> weights(dist.max_photons() + 1);
  const bool weak_limit = model.efficiency == 0.0 && model.dark_probability == 0.0;
  for (std::size_t n = 0; n < weights.size(); ++n) {
    weights[n] = dist[n] * (weak_limit ? static_cast<double>(n) : click_given_n(n, model));
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) {
    throw ConditioningError("herald click has zero probability for this distribution");
  }
  double mean = 0.0;
  for (std::size_t n = 0; n < weights.size(); ++n) {
    weights[n] /= total;
    mean += static_cast<double>(n) * weights[n];
  }
  return PhotonNumberDistribution(std::move(weights), DistributionFamily::conditional, mean);
}

}  // namespace qrelay
