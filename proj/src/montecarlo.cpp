#include "qrelay/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

#include "qrelay/errors.hpp"
#include "qrelay/simd/kernels.hpp"
#include "qrelay/simd/rng.hpp"

namespace qrelay {

namespace {

constexpr std::uint64_t kBlockPulses = std::uint64_t{1} << 20;
constexpr std::uint64_t kGateSalt = 0x6A09E667F3BCC909ull;
constexpr std::uint64_t kPulseSalt = 0xBB67AE8584CAA73Bull;
constexpr std::uint64_t kForkSalt = 0x3C6EF372FE94F82Bull;
// Output-stage draws are addressed as (detector << 16) | photon; the last
// slot of each detector is its dark-count draw.
constexpr std::uint64_t kDarkSlot = 0xFFFF;

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

void Scenario::validate() const {
  if (!(repetition_rate.value() > 0.0)) throw ConfigError("repetition rate must be positive");
  if (!(gating_rate.value() > 0.0)) throw ConfigError("gating rate must be positive");
  if (gating_rate > repetition_rate) {
    throw ConfigError("gating rate exceeds the laser repetition rate");
  }
  if (!(pump_duration.value() >= 0.0)) throw ConfigError("pump duration must be non-negative");
  if (!(dip_fwhm.value() > 0.0)) throw ConfigError("dip width must be positive");
  if (!(external_link_loss.value() >= 0.0) || !(monitor_loss.value() >= 0.0)) {
    throw ConfigError("losses must be non-negative");
  }
  for (const auto* s : {&external_source, &chip_source}) {
    if (!(s->mean_pairs() >= 0.0) || !std::isfinite(s->mean_pairs())) {
      throw ConfigError("source mean pair number must be finite and non-negative");
    }
    try {
      (void)s->pair_distribution();
    } catch (const DomainError& e) {
      throw ConfigError(std::string("source statistics: ") + e.what());
    }
  }
  for (const auto* f : {&filter_a, &filter_b, &filter_c}) {
    if (!(f->insertion_loss.value() >= 0.0)) throw ConfigError("filter loss must be non-negative");
  }
  chip.validate();
  for (const char* id : {ChipLayout::kAlicePort, ChipLayout::kSource, ChipLayout::kRouter,
                         ChipLayout::kBellCoupler, ChipLayout::kPortA, ChipLayout::kPortB,
                         ChipLayout::kPortC}) {
    if (!chip.nodes().contains(id)) {
      throw ConfigError(std::string("chip layout lacks the '") + id + "' element");
    }
  }
  try {
    for (const auto* d : {&detector_a, &detector_b, &detector_c}) d->validate();
    if (monitor) monitor->validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

double mode_overlap(Millimeters delay, Picoseconds dip_fwhm, double timing_visibility) {
  const double x = delay.value() / delay_to_path(dip_fwhm).value();
  return timing_visibility * std::exp(-4.0 * std::numbers::ln2 * x * x);
}

ScenarioProbabilities scenario_probabilities(const Scenario& s) {
  s.validate();
  const ChipLayout chip = s.chip.calibrated_to_measurement();
  auto t = [&](const char* from, const char* to) {
    return transmission_from_db(chip.path_loss(from, to));
  };
  ScenarioProbabilities p;
  p.gate_probability = s.gating_rate / s.repetition_rate;
  const auto ext = s.external_source.pair_distribution();
  const auto loc = s.chip_source.pair_distribution();
  p.external_pmf.assign(ext.pmf().begin(), ext.pmf().end());
  p.chip_pmf.assign(loc.pmf().begin(), loc.pmf().end());

  p.alice_to_bell = transmission_from_db(s.external_link_loss) *
                    t(ChipLayout::kAlicePort, ChipLayout::kBellCoupler);
  if (s.monitor) {
    p.monitor_transmission = transmission_from_db(s.monitor_loss);
    p.monitor_detect = p.monitor_transmission * s.monitor->efficiency;
    p.monitor_dark = s.monitor->dark_prob_per_gate();
  }
  const double router_cross = s.router.cross_ratio(s.router_voltage);
  const double to_router = t(ChipLayout::kSource, ChipLayout::kRouter);
  p.chip_to_bell = to_router * router_cross * t(ChipLayout::kRouter, ChipLayout::kBellCoupler);
  p.chip_to_herald = to_router * (1.0 - router_cross) *
                     t(ChipLayout::kRouter, ChipLayout::kPortC) *
                     s.filter_c.in_band_transmission();
  p.bell_cross = s.bell_coupler.cross_ratio(s.bell_voltage);
  p.out_a = t(ChipLayout::kBellCoupler, ChipLayout::kPortA) * s.filter_a.in_band_transmission();
  p.out_b = t(ChipLayout::kBellCoupler, ChipLayout::kPortB) * s.filter_b.in_band_transmission();
  p.efficiency = {s.detector_a.efficiency, s.detector_b.efficiency, s.detector_c.efficiency};
  p.dark = {s.detector_a.dark_prob_per_gate(), s.detector_b.dark_prob_per_gate(),
            s.detector_c.dark_prob_per_gate()};
  p.timing_visibility = v_timing(s.pump_duration, coherence_time(s.filter_a.filtered_mode()));
  p.overlap = mode_overlap(s.delay, s.dip_fwhm, p.timing_visibility);
  return p;
}

// ---------------------------------------------------------------------------
// Sampling

namespace {

// Uniform draws of one gated pulse: the first kBatch come from the batch
// kernel, later ones from the same counter-based stream.
class PulseDraws {
 public:
  static constexpr std::size_t kBatch = 16;

  PulseDraws(const simd::KernelTable& k, std::uint64_t stream) : stream_(stream) {
    k.fill_uniforms(stream, 0, buf_.data(), kBatch);
  }

  double next() {
    const std::uint64_t i = index_++;
    return i < kBatch ? buf_[i] : simd::stream_uniform(stream_, i);
  }

 private:
  std::uint64_t stream_;
  std::uint64_t index_ = 0;
  std::array<double, kBatch> buf_;
};

std::size_t sample_index(const std::vector<double>& cdf, double u) {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

struct Accumulator {
  std::uint64_t gated = 0;
  CoincidenceTally<std::uint64_t> at_delay;
  CoincidenceTally<std::uint64_t> reference;
  std::uint64_t monitor = 0;
  PhotonTally photons_at_delay;
  PhotonTally photons_reference;

  Accumulator& operator+=(const Accumulator& o) {
    gated += o.gated;
    at_delay += o.at_delay;
    reference += o.reference;
    monitor += o.monitor;
    photons_at_delay += o.photons_at_delay;
    photons_reference += o.photons_reference;
    return *this;
  }
};

struct OutputPorts {
  unsigned a = 0;
  unsigned b = 0;
};

class PulseSampler {
 public:
  explicit PulseSampler(const ScenarioProbabilities& p)
      : p_(p), ext_cdf_(cumulative(p.external_pmf)), chip_cdf_(cumulative(p.chip_pmf)) {
    const double t = p.bell_cross;
    auto bounds = [t](double o) {
      const double split = (1.0 - t) * (1.0 - t) + t * t - 2.0 * t * (1.0 - t) * o;
      const double bunch_a = t * (1.0 - t) * (1.0 + o);
      return std::array<double, 2>{split, split + bunch_a};
    };
    hom_delay_ = bounds(p.overlap);
    hom_reference_ = bounds(0.0);
  }

  void simulate(std::uint64_t stream, const simd::KernelTable& k, Accumulator& acc) const {
    PulseDraws draws(k, stream);
    PhotonTally common;
    const auto na = static_cast<unsigned>(sample_index(ext_cdf_, draws.next()));
    const auto nb = static_cast<unsigned>(sample_index(chip_cdf_, draws.next()));
    common.generated = 2ull * (na + nb);

    unsigned ma = 0;
    unsigned monitor_hits = 0;
    for (unsigned i = 0; i < na; ++i) {
      if (draws.next() < p_.alice_to_bell) ++ma;
      else ++common.lost;
      const double u = draws.next();
      if (u < p_.monitor_detect) ++monitor_hits;
      else if (u < p_.monitor_transmission) ++common.undetected;
      else ++common.lost;
    }
    common.detected += monitor_hits;
    if (monitor_hits > 0 || draws.next() < p_.monitor_dark) ++acc.monitor;

    unsigned kb = 0;
    unsigned herald_hits = 0;
    for (unsigned j = 0; j < nb; ++j) {
      if (draws.next() < p_.chip_to_bell) ++kb;
      else ++common.lost;
      if (draws.next() < p_.chip_to_herald) {
        if (draws.next() < p_.efficiency[kDetC]) ++herald_hits;
        else ++common.undetected;
      } else {
        ++common.lost;
      }
    }
    common.detected += herald_hits;
    const bool click_c = herald_hits > 0 || draws.next() < p_.dark[kDetC];

    const std::uint64_t fork = simd::mix64(stream ^ kForkSalt);
    if (ma == 1 && kb == 1) {
      const double u = draws.next();
      tally(route_pair(u, hom_delay_), fork, click_c, common, acc.at_delay, acc.photons_at_delay);
      tally(route_pair(u, hom_reference_), fork, click_c, common, acc.reference,
            acc.photons_reference);
    } else {
      OutputPorts ports;
      const double t = p_.bell_cross;
      for (unsigned i = 0; i < ma; ++i) {
        if (draws.next() < t) ++ports.b;
        else ++ports.a;
      }
      for (unsigned j = 0; j < kb; ++j) {
        if (draws.next() < t) ++ports.a;
        else ++ports.b;
      }
      tally(ports, fork, click_c, common, acc.at_delay, acc.photons_at_delay);
      tally(ports, fork, click_c, common, acc.reference, acc.photons_reference);
    }
  }

 private:
  static std::vector<double> cumulative(const std::vector<double>& pmf) {
    std::vector<double> cdf(pmf.size());
    double s = 0.0;
    for (std::size_t i = 0; i < pmf.size(); ++i) cdf[i] = (s += pmf[i]);
    return cdf;
  }

  static OutputPorts route_pair(double u, const std::array<double, 2>& bounds) {
    if (u < bounds[0]) return {1, 1};
    if (u < bounds[1]) return {2, 0};
    return {0, 2};
  }

  // Photons of one output port reaching, and being registered by, its detector.
  bool detect(std::uint64_t fork, std::uint64_t det, unsigned photons, double transmission,
              PhotonTally& photon_tally) const {
    unsigned hits = 0;
    for (unsigned k = 0; k < photons; ++k) {
      const double u = simd::stream_uniform(fork, (det << 16) | k);
      if (u < transmission * p_.efficiency[det]) ++hits;
      else if (u < transmission) ++photon_tally.undetected;
      else ++photon_tally.lost;
    }
    photon_tally.detected += hits;
    return hits > 0 || simd::stream_uniform(fork, (det << 16) | kDarkSlot) < p_.dark[det];
  }

  void tally(OutputPorts ports, std::uint64_t fork, bool click_c, const PhotonTally& common,
             CoincidenceTally<std::uint64_t>& t, PhotonTally& photons) const {
    PhotonTally branch = common;
    const bool a = detect(fork, kDetA, ports.a, p_.out_a, branch);
    const bool b = detect(fork, kDetB, ports.b, p_.out_b, branch);
    photons += branch;
    t.singles[kDetA] += a;
    t.singles[kDetB] += b;
    t.singles[kDetC] += click_c;
    t.ab += a && b;
    t.ac += a && click_c;
    t.bc += b && click_c;
    t.abc += a && b && click_c;
  }

  const ScenarioProbabilities& p_;
  std::vector<double> ext_cdf_;
  std::vector<double> chip_cdf_;
  std::array<double, 2> hom_delay_{};
  std::array<double, 2> hom_reference_{};
};

// Gated pulse indices of one block, by geometric gaps between gates.
template <class F>
void for_each_gated_pulse(std::uint64_t gate_key, std::uint64_t block, std::uint64_t n_pulses,
                          double gate_probability, F&& f) {
  const std::uint64_t begin = block * kBlockPulses;
  const std::uint64_t end = std::min(n_pulses, begin + kBlockPulses);
  if (gate_probability >= 1.0) {
    for (std::uint64_t i = begin; i < end; ++i) f(i);
    return;
  }
  const std::uint64_t stream = simd::derive_stream(gate_key, block);
  const double log_miss = std::log1p(-gate_probability);
  std::uint64_t pos = begin;
  for (std::uint64_t k = 0;; ++k) {
    const double gap = std::floor(std::log1p(-simd::stream_uniform(stream, k)) / log_miss);
    if (!(gap < static_cast<double>(end - pos))) break;
    pos += static_cast<std::uint64_t>(gap);
    f(pos);
    if (++pos >= end) break;
  }
}

}  // namespace

CountsReport run(const Scenario& scenario, std::uint64_t n_pulses, std::uint64_t seed,
                 const RunOptions& options) {
  if (n_pulses == 0) throw DomainError("the number of pulses must be positive");
  const ScenarioProbabilities probs = scenario_probabilities(scenario);
  const PulseSampler sampler(probs);

  const std::uint64_t gate_key = simd::mix64(seed ^ kGateSalt);
  const std::uint64_t pulse_key = simd::mix64(seed ^ kPulseSalt);
  const std::uint64_t n_blocks = (n_pulses + kBlockPulses - 1) / kBlockPulses;
  unsigned workers = options.workers ? options.workers : std::thread::hardware_concurrency();
  workers = static_cast<unsigned>(std::clamp<std::uint64_t>(workers, 1, n_blocks));

  const simd::KernelTable& kernels = simd::kernels();
  std::atomic<std::uint64_t> next_block{0};
  std::vector<Accumulator> partial(workers);
  auto work = [&](unsigned w) {
    Accumulator& acc = partial[w];
    for (std::uint64_t b; (b = next_block.fetch_add(1)) < n_blocks;) {
      for_each_gated_pulse(gate_key, b, n_pulses, probs.gate_probability, [&](std::uint64_t i) {
        ++acc.gated;
        sampler.simulate(simd::derive_stream(pulse_key, i), kernels, acc);
      });
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) threads.emplace_back(work, w);
  }
  Accumulator total;
  for (const auto& a : partial) total += a;

  CountsReport r;
  r.pulses_simulated = n_pulses;
  r.gated_pulses = total.gated;
  r.at_delay = total.at_delay;
  r.reference = total.reference;
  r.monitor_singles = total.monitor;
  r.photons_at_delay = total.photons_at_delay;
  r.photons_reference = total.photons_reference;
  r.delay_mm = scenario.delay.value();
  r.overlap = probs.overlap;
  r.dark_probability = probs.dark;
  subtract_accidentals(r);
  r.analytic_visibility = predicted_visibility(scenario);
  return r;
}

// ---------------------------------------------------------------------------
// Expected counts

namespace {

struct ClickProbabilities {
  double a = 0.0;
  double b = 0.0;
  double ab = 0.0;
};

// Given photon counts routed to each output, with independent detection.
ClickProbabilities clicks_fixed(unsigned na, unsigned nb, const ScenarioProbabilities& p) {
  const double qa = p.out_a * p.efficiency[kDetA];
  const double qb = p.out_b * p.efficiency[kDetB];
  const double miss_a = std::pow(1.0 - qa, na) * (1.0 - p.dark[kDetA]);
  const double miss_b = std::pow(1.0 - qb, nb) * (1.0 - p.dark[kDetB]);
  return {1.0 - miss_a, 1.0 - miss_b, (1.0 - miss_a) * (1.0 - miss_b)};
}

ClickProbabilities clicks(unsigned ma, unsigned kb, double overlap,
                          const ScenarioProbabilities& p) {
  const double t = p.bell_cross;
  if (ma == 1 && kb == 1) {
    const double split = (1.0 - t) * (1.0 - t) + t * t - 2.0 * t * (1.0 - t) * overlap;
    const double bunch = t * (1.0 - t) * (1.0 + overlap);
    ClickProbabilities out;
    for (auto [w, na, nb] : {std::tuple{split, 1u, 1u}, std::tuple{bunch, 2u, 0u},
                             std::tuple{bunch, 0u, 2u}}) {
      const auto c = clicks_fixed(na, nb, p);
      out.a += w * c.a;
      out.b += w * c.b;
      out.ab += w * c.ab;
    }
    return out;
  }
  const double qa = p.out_a * p.efficiency[kDetA];
  const double qb = p.out_b * p.efficiency[kDetB];
  // Per photon: click at A, click at B (mutually exclusive).
  const double a_from_a = (1.0 - t) * qa, b_from_a = t * qb;
  const double a_from_b = t * qa, b_from_b = (1.0 - t) * qb;
  const double da = 1.0 - p.dark[kDetA], db = 1.0 - p.dark[kDetB];
  const double none_a = da * std::pow(1.0 - a_from_a, ma) * std::pow(1.0 - a_from_b, kb);
  const double none_b = db * std::pow(1.0 - b_from_a, ma) * std::pow(1.0 - b_from_b, kb);
  const double none_ab = da * db * std::pow(1.0 - a_from_a - b_from_a, ma) *
                         std::pow(1.0 - a_from_b - b_from_b, kb);
  return {1.0 - none_a, 1.0 - none_b, 1.0 - none_a - none_b + none_ab};
}

}  // namespace

ExpectedCounts expected_counts(const Scenario& scenario) {
  const ScenarioProbabilities p = scenario_probabilities(scenario);
  ExpectedCounts out;
  out.gate_probability = p.gate_probability;
  out.overlap = p.overlap;
  out.dark_probability = p.dark;

  const auto arm_a = apply_transmission(PhotonNumberDistribution::custom(p.external_pmf),
                                        p.alice_to_bell);
  const double herald_detect = p.chip_to_herald * p.efficiency[kDetC];
  const double pb = p.chip_to_bell;
  for (std::size_t n = 0; n < p.chip_pmf.size(); ++n) {
    const double pn = p.chip_pmf[n];
    if (pn == 0.0) continue;
    const double click_c = 1.0 - std::pow(1.0 - herald_detect, static_cast<double>(n)) *
                                     (1.0 - p.dark[kDetC]);
    for (std::size_t kb = 0; kb <= n; ++kb) {
      const double wb = pn * std::exp(std::lgamma(n + 1.0) - std::lgamma(kb + 1.0) -
                                      std::lgamma(n - kb + 1.0)) *
                        std::pow(pb, static_cast<double>(kb)) *
                        std::pow(1.0 - pb, static_cast<double>(n - kb));
      if (wb == 0.0) continue;
      for (std::size_t ma = 0; ma <= arm_a.max_photons(); ++ma) {
        const double w = wb * arm_a[ma];
        if (w == 0.0) continue;
        for (auto [overlap, tally] : {std::pair{p.overlap, &out.at_delay},
                                      std::pair{0.0, &out.reference}}) {
          const auto c = clicks(static_cast<unsigned>(ma), static_cast<unsigned>(kb), overlap, p);
          tally->singles[kDetA] += w * c.a;
          tally->singles[kDetB] += w * c.b;
          tally->singles[kDetC] += w * click_c;
          tally->ab += w * c.ab;
          tally->ac += w * c.a * click_c;
          tally->bc += w * c.b * click_c;
          tally->abc += w * c.ab * click_c;
        }
      }
    }
  }
  for (std::size_t n = 0; n < p.external_pmf.size(); ++n) {
    out.monitor_singles += p.external_pmf[n] *
                           (1.0 - std::pow(1.0 - p.monitor_detect, static_cast<double>(n)) *
                                      (1.0 - p.monitor_dark));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Accidentals

NetThreefold subtract_accidentals(const CoincidenceTally<double>& tally, double gates,
                                  const std::array<double, 3>& d, bool poisson_errors) {
  if (!(gates > 0.0)) throw DomainError("accidental subtraction needs gated pulses");
  NetThreefold out;
  out.raw = tally.abc;
  const std::array<double, 3> keep{1.0 - d[0], 1.0 - d[1], 1.0 - d[2]};
  // Photon-only click probabilities, inverted from the measured rates
  // assuming dark counts independent of everything else.
  std::array<double, 3> s{}, q{};
  for (std::size_t i = 0; i < 3; ++i) {
    s[i] = tally.singles[i] / gates;
    q[i] = std::max((s[i] - d[i]) / keep[i], 0.0);
  }
  auto pair_q = [&](std::size_t i, std::size_t j, double coincidences) {
    const double none = 1.0 - s[i] - s[j] + coincidences / gates;
    return std::max(none / (keep[i] * keep[j]) - 1.0 + q[i] + q[j], 0.0);
  };
  const double q_ab = pair_q(0, 1, tally.ab);
  const double q_ac = pair_q(0, 2, tally.ac);
  const double q_bc = pair_q(1, 2, tally.bc);

  const double accidental_rate = d[0] * q_bc + d[1] * q_ac + d[2] * q_ab +
                                 d[0] * d[1] * q[2] + d[0] * d[2] * q[1] +
                                 d[1] * d[2] * q[0] + d[0] * d[1] * d[2];
  out.accidental = gates * accidental_rate;
  out.net = std::max(out.raw - out.accidental, 0.0);
  if (poisson_errors) {
    const double var_acc = d[0] * d[0] * tally.bc + d[1] * d[1] * tally.ac +
                           d[2] * d[2] * tally.ab +
                           std::pow(d[0] * d[1], 2) * tally.singles[2] +
                           std::pow(d[0] * d[2], 2) * tally.singles[1] +
                           std::pow(d[1] * d[2], 2) * tally.singles[0];
    out.accidental_error = std::sqrt(var_acc);
    out.net_error = std::sqrt(out.raw + var_acc);
  }
  return out;
}

namespace {

CoincidenceTally<double> to_double(const CoincidenceTally<std::uint64_t>& t) {
  CoincidenceTally<double> out;
  for (std::size_t i = 0; i < 3; ++i) out.singles[i] = static_cast<double>(t.singles[i]);
  out.ab = static_cast<double>(t.ab);
  out.ac = static_cast<double>(t.ac);
  out.bc = static_cast<double>(t.bc);
  out.abc = static_cast<double>(t.abc);
  return out;
}

// 1 - x / y with first-order propagation of independent errors.
Estimate dip_visibility(double x, double sx, double y, double sy) {
  if (!(y > 0.0)) return {nan(), nan()};
  const double r = x / y;
  return {1.0 - r, std::sqrt(sx * sx / (y * y) + r * r * sy * sy / (y * y))};
}

}  // namespace

void subtract_accidentals(CountsReport& report) {
  if (report.gated_pulses == 0) {
    report.net_at_delay = report.net_reference = {};
    report.raw_visibility = report.net_visibility = {nan(), nan()};
    return;
  }
  const double g = static_cast<double>(report.gated_pulses);
  report.net_at_delay = subtract_accidentals(to_double(report.at_delay), g,
                                             report.dark_probability, true);
  report.net_reference = subtract_accidentals(to_double(report.reference), g,
                                              report.dark_probability, true);
  const double rd = report.net_at_delay.raw;
  const double rr = report.net_reference.raw;
  report.raw_visibility = dip_visibility(rd, std::sqrt(rd), rr, std::sqrt(rr));
  report.net_visibility =
      dip_visibility(report.net_at_delay.net, report.net_at_delay.net_error,
                     report.net_reference.net, report.net_reference.net_error);
}

double predicted_visibility(const Scenario& scenario) {
  const ScenarioProbabilities p = scenario_probabilities(scenario);
  try {
    const auto arm_a = apply_transmission(PhotonNumberDistribution::custom(p.external_pmf),
                                          p.alice_to_bell);
    const HeraldModel herald{p.chip_to_herald * p.efficiency[kDetC], p.dark[kDetC]};
    const auto arm_b = apply_transmission(
        herald_condition(PhotonNumberDistribution::custom(p.chip_pmf), herald), p.chip_to_bell);
    return v_statistics(arm_a, arm_b) * p.timing_visibility;
  } catch (const ConditioningError&) {
    return nan();
  } catch (const UndefinedVisibilityError&) {
    return nan();
  }
}

// ---------------------------------------------------------------------------
// Dip scan

DipScan scan_dip(const Scenario& scenario, std::span<const double> positions_mm,
                 std::uint64_t n_pulses_per_point, std::uint64_t seed,
                 const RunOptions& options) {
  if (positions_mm.size() < 3) throw DomainError("a dip scan needs at least three positions");
  const auto [lo, hi] = std::minmax_element(positions_mm.begin(), positions_mm.end());
  const double width_mm = delay_to_path(scenario.dip_fwhm).value();
  if (!(*hi - *lo > 2.0 * width_mm)) {
    throw DomainError("scan positions must span more than twice the expected dip width");
  }
  DipScan out;
  std::vector<DipSample> samples;
  for (std::size_t i = 0; i < positions_mm.size(); ++i) {
    Scenario s = scenario;
    s.delay = Millimeters(positions_mm[i]);
    DipScanPoint point;
    point.position_mm = positions_mm[i];
    double gates = 1.0;
    if (n_pulses_per_point == 0) {
      const auto e = expected_counts(s);
      point.threefold = subtract_accidentals(e.at_delay, 1.0, e.dark_probability, false);
    } else {
      point.report = run(s, n_pulses_per_point, simd::derive_stream(seed, i), options);
      point.threefold = point.report->net_at_delay;
      gates = static_cast<double>(point.report->gated_pulses);
      if (gates == 0.0) gates = 1.0;
    }
    samples.push_back({point.position_mm, point.threefold.net / gates,
                       point.threefold.net_error / gates});
    out.points.push_back(std::move(point));
  }
  out.profile = fit_dip(std::move(samples));
  return out;
}

}  // namespace qrelay
