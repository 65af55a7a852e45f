#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <unsupported/Eigen/NonLinearOptimization>

#include "qrelay/interference.hpp"

namespace qrelay {
namespace {

constexpr double kFourLn2 = 4.0 * std::numbers::ln2;

// Parameters: baseline, visibility, center, fwhm.
struct DipResiduals {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  const std::vector<DipSample>& samples;
  std::vector<double> sigma;

  int inputs() const { return 4; }
  int values() const { return static_cast<int>(samples.size()); }

  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& r) const {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const double u = (samples[i].position_mm - p[2]) / p[3];
      const double g = std::exp(-kFourLn2 * u * u);
      r[static_cast<Eigen::Index>(i)] = (p[0] * (1.0 - p[1] * g) - samples[i].rate) / sigma[i];
    }
    return 0;
  }

  int df(const Eigen::VectorXd& p, Eigen::MatrixXd& j) const {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      const double d = samples[i].position_mm - p[2];
      const double u = d / p[3];
      const double g = std::exp(-kFourLn2 * u * u);
      const double s = sigma[i];
      j(row, 0) = (1.0 - p[1] * g) / s;
      j(row, 1) = -p[0] * g / s;
      // d/dc of g = g * 2 k d / w^2, d/dw of g = g * 2 k d^2 / w^3
      j(row, 2) = -p[0] * p[1] * g * 2.0 * kFourLn2 * d / (p[3] * p[3]) / s;
      j(row, 3) = -p[0] * p[1] * g * 2.0 * kFourLn2 * d * d / (p[3] * p[3] * p[3]) / s;
    }
    return 0;
  }
};

}  // namespace

DipProfile fit_dip(std::vector<DipSample> samples) {
  DipProfile out;
  out.samples = std::move(samples);
  if (out.samples.size() < 4) {
    out.fit_failure = "at least four samples are needed for a dip fit";
    return out;
  }
  // Fit in units of the largest rate so tiny per-pulse rates stay well scaled.
  double scale = 0.0;
  for (const auto& p : out.samples) scale = std::max(scale, std::abs(p.rate));
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    out.fit_failure = "all samples are zero";
    return out;
  }
  std::vector<DipSample> s = out.samples;
  for (auto& p : s) {
    p.rate /= scale;
    p.error /= scale;
  }

  double min_err = 0.0;
  for (const auto& p : s) {
    if (p.error > 0.0 && (min_err == 0.0 || p.error < min_err)) min_err = p.error;
  }
  const bool weighted = min_err > 0.0;
  std::vector<double> sigma(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    sigma[i] = weighted ? std::max(s[i].error, min_err) : 1.0;
  }

  // Initial guess from the extreme samples.
  auto [lo_it, hi_it] = std::minmax_element(
      s.begin(), s.end(), [](const DipSample& a, const DipSample& b) { return a.rate < b.rate; });
  const double baseline0 = hi_it->rate;
  const double depth0 = baseline0 - lo_it->rate;
  if (!(depth0 > 0.0)) {
    out.fit_failure = "profile is flat; no dip to fit";
    return out;
  }
  const double center0 = lo_it->position_mm;
  // Closest half-depth crossings on either side of the minimum.
  const double half = lo_it->rate + depth0 / 2.0;
  double left = -INFINITY;
  double right = INFINITY;
  for (const auto& p : s) {
    if (p.rate < half) continue;
    if (p.position_mm < center0) left = std::max(left, p.position_mm);
    if (p.position_mm > center0) right = std::min(right, p.position_mm);
  }
  double width0 = (s.back().position_mm - s.front().position_mm) / 4.0;
  if (std::isfinite(left) && std::isfinite(right)) width0 = right - left;
  else if (std::isfinite(left)) width0 = 2.0 * (center0 - left);
  else if (std::isfinite(right)) width0 = 2.0 * (right - center0);

  DipResiduals functor{s, sigma};
  Eigen::VectorXd p(4);
  p << baseline0, depth0 / baseline0, center0, std::abs(width0);
  Eigen::LevenbergMarquardt<DipResiduals> lm(functor);
  lm.parameters.maxfev = 2000;
  lm.parameters.xtol = 1e-14;
  lm.parameters.ftol = 1e-14;
  const auto status = lm.minimize(p);
  const bool ok = status == Eigen::LevenbergMarquardtSpace::RelativeReductionTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::RelativeErrorTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::RelativeErrorAndReductionTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::CosinusTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::XtolTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::FtolTooSmall;
  if (!ok || !p.allFinite() || p[3] == 0.0) {
    out.fit_failure = "gaussian fit did not converge (status " + std::to_string(status) + ")";
    return out;
  }

  Eigen::VectorXd r(s.size());
  functor(p, r);
  Eigen::MatrixXd j(s.size(), 4);
  functor.df(p, j);
  const double chi2 = r.squaredNorm();
  const int dof = static_cast<int>(s.size()) - 4;
  Eigen::MatrixXd cov = (j.transpose() * j).completeOrthogonalDecomposition().pseudoInverse();
  if (!weighted && dof > 0) cov *= chi2 / dof;

  DipFit fit;
  fit.baseline = p[0] * scale;
  fit.visibility = p[1];
  fit.center_mm = p[2];
  fit.fwhm_mm = std::abs(p[3]);
  fit.baseline_error = std::sqrt(std::max(cov(0, 0), 0.0)) * scale;
  fit.visibility_error = std::sqrt(std::max(cov(1, 1), 0.0));
  fit.fwhm_error_mm = std::sqrt(std::max(cov(3, 3), 0.0));
  fit.chi2 = weighted ? chi2 : chi2 * scale * scale;
  fit.degrees_of_freedom = dof;
  out.fit = fit;
  return out;
}

}  // namespace qrelay
