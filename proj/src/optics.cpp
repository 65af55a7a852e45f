#include "qrelay/optics.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <functional>
#include <istream>
#include <limits>
#include <set>
#include <sstream>

#include "qrelay/errors.hpp"
#include "qrelay/simd/kernels.hpp"

namespace qrelay {

// ---------------------------------------------------------------------------
// Coupler

namespace {

double cross_fraction(double k, double g) {
  const double k2 = k * k;
  const double total = k2 + g * g;
  if (total == 0.0) return 0.0;
  const double s = std::sin(std::sqrt(total));
  return std::clamp(k2 / total * s * s, 0.0, 1.0);
}

// Minimizes f on [lo, hi]: grid scan for the basin, then Brent.
std::pair<double, double> minimize_1d(const std::function<double(double)>& f, double lo,
                                      double hi) {
  constexpr int kGrid = 256;
  int best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kGrid; ++i) {
    const double v = f(lo + (hi - lo) * i / kGrid);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  const double a = lo + (hi - lo) * std::max(best - 1, 0) / kGrid;
  const double b = lo + (hi - lo) * std::min(best + 1, kGrid) / kGrid;
  auto r = boost::math::tools::brent_find_minima(f, a, b, std::numeric_limits<double>::digits);
  if (r.second > best_val) return {lo + (hi - lo) * best / kGrid, best_val};
  return r;
}

}  // namespace

double CouplerModel::cross_ratio(Volts v) const {
  return cross_fraction(coupling_strength_times_length, detuning_per_volt * v.value());
}

double CouplerModel::detuning_ratio(Volts v) const {
  return detuning_per_volt * v.value() / coupling_strength_times_length;
}

double coupler_ratio(const CouplerModel& model, Volts voltage) {
  return model.cross_ratio(voltage);
}

std::vector<CalibrationAnchor> default_coupler_anchors() {
  return {{Volts(0.0), 1.0}, {Volts(30.0), 0.5}};
}

CouplerModel calibrate_coupler(std::span<const CalibrationAnchor> anchors,
                               const CalibrationOptions& options) {
  if (anchors.empty()) throw CalibrationError("at least one calibration anchor is required");
  double v_max = 0.0;
  for (const auto& a : anchors) {
    if (!std::isfinite(a.voltage.value())) throw CalibrationError("anchor voltage is not finite");
    if (!(a.cross_ratio >= 0.0 && a.cross_ratio <= 1.0)) {
      throw CalibrationError("anchor ratio " + std::to_string(a.cross_ratio) +
                             " outside [0, 1] is unreachable");
    }
    v_max = std::max(v_max, std::abs(a.voltage.value()));
  }
  const double k_fixed = options.coupling_strength_times_length;
  if (!(k_fixed > 0.0 && k_fixed <= std::numbers::pi / 2.0 + 1e-12)) {
    throw CalibrationError("kappa*L must lie in (0, pi/2]");
  }
  if (!options.fit_coupling_strength) {
    const double t0 = cross_fraction(k_fixed, 0.0);
    for (const auto& a : anchors) {
      if (a.cross_ratio > t0 + 1e-12) {
        throw CalibrationError("anchor ratio " + std::to_string(a.cross_ratio) +
                               " exceeds the zero-voltage transfer " + std::to_string(t0));
      }
    }
  }

  auto ssr = [&](double k, double gamma) {
    double s = 0.0;
    for (const auto& a : anchors) {
      const double r = cross_fraction(k, gamma * a.voltage.value()) - a.cross_ratio;
      s += r * r;
    }
    return s;
  };
  // Best slope on the first lobe for a given kappa*L.
  auto fit_gamma = [&](double k) -> std::pair<double, double> {
    if (v_max == 0.0) return {0.0, ssr(k, 0.0)};
    const double gamma_max = std::sqrt(std::numbers::pi * std::numbers::pi - k * k) / v_max;
    return minimize_1d([&](double g) { return ssr(k, g); }, 0.0, gamma_max);
  };

  CouplerModel model;
  model.interaction_length = options.interaction_length;
  model.detuning_constrained = v_max > 0.0;
  double k = k_fixed;
  if (options.fit_coupling_strength) {
    k = minimize_1d([&](double kk) { return fit_gamma(kk).second; }, 1e-6,
                    std::numbers::pi / 2.0)
            .first;
  }
  const auto [gamma, best_ssr] = fit_gamma(k);
  model.coupling_strength_times_length = k;
  model.detuning_per_volt = gamma;
  model.fit_residual = std::sqrt(best_ssr / static_cast<double>(anchors.size()));
  return model;
}

std::vector<CalibrationAnchor> read_anchor_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("anchor CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "voltage_V,cross_ratio") {
    throw ConfigError("anchor CSV header must be 'voltage_V,cross_ratio', got '" + line + "'");
  }
  std::vector<CalibrationAnchor> anchors;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    ss.imbue(std::locale::classic());
    double v = 0.0;
    double r = 0.0;
    char comma = 0;
    if (!(ss >> v >> comma >> r) || comma != ',' || !(ss >> std::ws).eof()) {
      throw ConfigError("anchor CSV row " + std::to_string(row) + " is malformed: '" + line + "'");
    }
    anchors.push_back({Volts(v), r});
  }
  if (anchors.empty()) throw ConfigError("anchor CSV has no rows");
  return anchors;
}

// ---------------------------------------------------------------------------
// Source, filter, detector

PhotonNumberDistribution SpdcSource::pair_distribution() const {
  const double n = mean_pairs();
  switch (statistics) {
    case DistributionFamily::poisson: return poisson(n);
    case DistributionFamily::thermal: return thermal(n);
    case DistributionFamily::custom: return PhotonNumberDistribution::custom(custom_pmf);
    default: throw ConfigError("source statistics must be thermal, poisson or custom");
  }
}

void spdc_spectral_density(const SpdcSource& source, std::span<const double> wavelengths_nm,
                           std::span<double> out) {
  const double center = source.spectrum.center_wavelength().value();
  const double fwhm = to_nanometers(source.spectrum.fwhm_bandwidth()).value();
  if (source.spectrum.lineshape() == Lineshape::gaussian) {
    simd::gaussian_profile(wavelengths_nm, center, fwhm, out);
  } else {
    simd::sinc2_profile(wavelengths_nm, center, fwhm, out);
  }
}

double spdc_spectral_density(const SpdcSource& source, Nanometers wavelength) {
  const double x = wavelength.value();
  double out = 0.0;
  spdc_spectral_density(source, std::span<const double>(&x, 1), std::span<double>(&out, 1));
  return out;
}

double Filter::transmission(Nanometers wavelength) const {
  const double half = to_nanometers(fwhm).value() / 2.0;
  return std::abs(wavelength.value() - center.value()) <= half ? in_band_transmission() : 0.0;
}

double filter_overlap(const SpdcSource& source, const Filter& filter) {
  const double fwhm = to_nanometers(source.spectrum.fwhm_bandwidth()).value();
  double total = 0.0;
  if (source.spectrum.lineshape() == Lineshape::gaussian) {
    total = fwhm * std::sqrt(std::numbers::pi / (4.0 * std::numbers::ln2));
  } else {
    // integral of sin(a x)^2 / (a x)^2 over the real line is pi / a.
    total = std::numbers::pi * fwhm / (2.0 * simd::kSinc2HalfMaxArgument);
  }
  const double half = to_nanometers(filter.fwhm).value() / 2.0;
  const double lo = filter.center.value() - half;
  const double hi = filter.center.value() + half;
  auto density = [&](double x) { return spdc_spectral_density(source, Nanometers(x)); };
  const double in_band = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      density, lo, hi, 10, 1e-12);
  return filter.in_band_transmission() * in_band / total;
}

double DetectorModel::dark_prob_per_gate() const {
  validate();
  return -std::expm1(gate_window.value() * std::log1p(-dark_prob_per_ns));
}

void DetectorModel::validate() const {
  if (!(efficiency >= 0.0 && efficiency <= 1.0)) {
    throw DomainError("detector efficiency must lie in [0, 1]");
  }
  if (!(dark_prob_per_ns >= 0.0 && dark_prob_per_ns < 1.0)) {
    throw DomainError("dark-count probability per ns must lie in [0, 1)");
  }
  if (!(gate_window.value() > 0.0)) throw DomainError("gate window must be positive");
}

double detector_click_prob(const DetectorModel& model, std::size_t incident_photons) {
  const double dark = model.dark_prob_per_gate();
  const double miss = std::pow(1.0 - model.efficiency, static_cast<double>(incident_photons));
  return 1.0 - miss * (1.0 - dark);
}

// ---------------------------------------------------------------------------
// Losses

Decibels LossElement::required_loss() const {
  if (!loss) throw ConfigError("loss element '" + name + "' has no loss value");
  if (!std::isfinite(loss->value())) throw ConfigError("loss element '" + name + "' is not finite");
  return *loss;
}

PhotonNumberDistribution apply_transmission(const PhotonNumberDistribution& dist,
                                            double transmission) {
  if (!(transmission >= 0.0 && transmission <= 1.0)) {
    throw DomainError("transmission must lie in [0, 1]");
  }
  const std::size_t n_max = dist.max_photons();
  std::vector<double> out(n_max + 1, 0.0);
  const double t = transmission;
  for (std::size_t n = 0; n <= n_max; ++n) {
    const double p = dist[n];
    if (p == 0.0) continue;
    if (t == 1.0) {
      out[n] += p;
      continue;
    }
    if (t == 0.0) {
      out[0] += p;
      continue;
    }
    // Binomial(n, t) pmf by recurrence from k = 0.
    double b = std::pow(1.0 - t, static_cast<double>(n));
    const double odds = t / (1.0 - t);
    for (std::size_t k = 0; k <= n; ++k) {
      out[k] += p * b;
      b *= odds * static_cast<double>(n - k) / static_cast<double>(k + 1);
    }
  }
  const DistributionFamily family =
      dist.family() == DistributionFamily::thermal || dist.family() == DistributionFamily::poisson
          ? dist.family()
          : DistributionFamily::custom;
  const double mean = family == DistributionFamily::custom ? dist.pmf_mean() * t
                                                           : dist.mean_pairs() * t;
  return PhotonNumberDistribution(std::move(out), family, mean);
}

// ---------------------------------------------------------------------------
// Chip layout

void ChipLayout::add_node(const std::string& id, NodeKind kind) {
  if (!nodes_.emplace(id, kind).second) throw ConfigError("duplicate chip node '" + id + "'");
}

void ChipLayout::add_segment(const std::string& from, const std::string& to,
                             LossElement element) {
  segments_.push_back({from, to, std::move(element)});
}

void ChipLayout::validate() const {
  std::map<std::string, std::vector<std::string>> out_edges;
  for (const auto& s : segments_) {
    if (!nodes_.contains(s.from)) throw ConfigError("segment starts at unknown node '" + s.from + "'");
    if (!nodes_.contains(s.to)) throw ConfigError("segment ends at unknown node '" + s.to + "'");
    s.element.required_loss();
    out_edges[s.from].push_back(s.to);
  }
  enum class Mark { none, active, done };
  std::map<std::string, Mark> mark;
  std::function<void(const std::string&)> visit = [&](const std::string& id) {
    mark[id] = Mark::active;
    for (const auto& next : out_edges[id]) {
      if (mark[next] == Mark::active) throw ConfigError("chip layout has a cycle through '" + next + "'");
      if (mark[next] == Mark::none) visit(next);
    }
    mark[id] = Mark::done;
  };
  for (const auto& [id, kind] : nodes_) {
    if (mark[id] == Mark::none) visit(id);
  }
  bool has_output = false;
  for (const auto& [id, kind] : nodes_) {
    const bool sink = out_edges[id].empty();
    if (kind == NodeKind::output_port) {
      has_output = true;
      if (!sink) throw ConfigError("output port '" + id + "' has outgoing segments");
    } else if (sink) {
      throw ConfigError("photons entering node '" + id + "' never reach an output port");
    }
  }
  if (!has_output) throw ConfigError("chip layout has no output port");
}

std::vector<std::string> ChipLayout::path(const std::string& from, const std::string& to) const {
  if (!nodes_.contains(from)) throw ConfigError("unknown chip node '" + from + "'");
  if (!nodes_.contains(to)) throw ConfigError("unknown chip node '" + to + "'");
  std::vector<std::vector<std::string>> found;
  std::vector<std::string> current{from};
  std::function<void(const std::string&)> walk = [&](const std::string& id) {
    if (id == to) {
      found.push_back(current);
      return;
    }
    if (current.size() > nodes_.size()) throw ConfigError("chip layout has a cycle");
    for (const auto& s : segments_) {
      if (s.from != id) continue;
      current.push_back(s.to);
      walk(s.to);
      current.pop_back();
    }
  };
  walk(from);
  if (found.empty()) throw ConfigError("no path from '" + from + "' to '" + to + "'");
  if (found.size() > 1) throw ConfigError("ambiguous path from '" + from + "' to '" + to + "'");
  return found.front();
}

Decibels ChipLayout::path_loss(const std::string& from, const std::string& to) const {
  const auto nodes = path(from, to);
  Decibels total(0.0);
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    for (const auto& s : segments_) {
      if (s.from == nodes[i] && s.to == nodes[i + 1]) {
        total = total + s.element.required_loss();
        break;
      }
    }
  }
  return total;
}

ChipLayout ChipLayout::calibrated_to_measurement() const {
  ChipLayout out = *this;
  if (!measured_insertion_loss) return out;
  const double modelled = path_loss(kAlicePort, kPortA).value();
  if (!(modelled > 0.0)) {
    throw ConfigError("cannot rescale a chip whose modelled insertion loss is zero");
  }
  const double factor = measured_insertion_loss->value() / modelled;
  for (auto& s : out.segments_) s.element.loss = s.element.required_loss() * factor;
  return out;
}

ChipLayout ChipLayout::relay_chip() {
  ChipLayout chip;
  chip.add_node(kAlicePort, NodeKind::input_port);
  chip.add_node(kPumpPort, NodeKind::input_port);
  chip.add_node("in_1", NodeKind::waveguide);
  chip.add_node("in_2", NodeKind::waveguide);
  chip.add_node(kSource, NodeKind::source);
  chip.add_node(kRouter, NodeKind::coupler);
  chip.add_node(kBellCoupler, NodeKind::coupler);
  chip.add_node("out_a", NodeKind::waveguide);
  chip.add_node("out_b", NodeKind::waveguide);
  chip.add_node("out_c", NodeKind::waveguide);
  chip.add_node(kPortA, NodeKind::output_port);
  chip.add_node(kPortB, NodeKind::output_port);
  chip.add_node(kPortC, NodeKind::output_port);

  auto seg = [&](const char* from, const char* to, const char* name, double db) {
    chip.add_segment(from, to, LossElement{name, Decibels(db)});
  };
  // 3 dB per fiber/chip facet; propagation plus bends share 2.5 dB along
  // every input-to-output route.
  seg(kAlicePort, "in_1", "fiber_to_chip_1", 3.0);
  seg("in_1", kBellCoupler, "propagation_in1_c2", 1.25);
  seg(kPumpPort, "in_2", "fiber_to_chip_2", 3.0);
  seg("in_2", kSource, "propagation_in2_spdc", 0.5);
  seg(kSource, kRouter, "propagation_spdc_c1", 0.5);
  seg(kRouter, kBellCoupler, "propagation_c1_c2", 0.5);
  seg(kRouter, "out_c", "propagation_c1_outc", 1.25);
  seg("out_c", kPortC, "chip_to_fiber_c", 3.0);
  seg(kBellCoupler, "out_a", "propagation_c2_outa", 1.25);
  seg("out_a", kPortA, "chip_to_fiber_a", 3.0);
  seg(kBellCoupler, "out_b", "propagation_c2_outb", 1.25);
  seg("out_b", kPortB, "chip_to_fiber_b", 3.0);
  return chip;
}

Decibels chip_insertion_loss(const ChipLayout& layout) {
  layout.validate();
  if (layout.measured_insertion_loss) return *layout.measured_insertion_loss;
  return layout.path_loss(ChipLayout::kAlicePort, ChipLayout::kPortA);
}

}  // namespace qrelay
