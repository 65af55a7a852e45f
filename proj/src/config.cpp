#include "qrelay/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include <json.hpp>

#include "qrelay/errors.hpp"

namespace qrelay {

namespace detail {
// Generated from presets/*.json at configure time.
const std::vector<std::pair<std::string, std::string_view>>& embedded_presets();
}  // namespace detail

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

template <class E>
using EnumTable = std::vector<std::pair<E, const char*>>;

const EnumTable<Lineshape> kLineshapes{{Lineshape::gaussian, "gaussian"},
                                       {Lineshape::sinc_squared, "sinc_squared"}};
const EnumTable<DistributionFamily> kFamilies{{DistributionFamily::thermal, "thermal"},
                                              {DistributionFamily::poisson, "poisson"},
                                              {DistributionFamily::custom, "custom"}};
const EnumTable<DistanceCriterion::Kind> kCriteria{
    {DistanceCriterion::Kind::snr_unity, "snr_unity"},
    {DistanceCriterion::Kind::qber_threshold, "qber_threshold"}};

std::string segment_key(const ChipSegment& s) { return s.from + "->" + s.to; }

// Reads only the keys present and rejects the rest.
class Reader {
 public:
  static constexpr bool kReading = true;

  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) throw ConfigError("unknown key '" + where(key) + "'");
    }
  }

  void num(const char* key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) fail_key(key, "expected a number");
      out = v->get<double>();
      if (!std::isfinite(out)) fail_key(key, "expected a finite number");
    }
  }

  template <class Tag>
  void num(const char* key, Quantity<Tag>& out) {
    double x = out.value();
    num(key, x);
    out = Quantity<Tag>(x);
  }

  void count(const char* key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) fail_key(key, "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void flag(const char* key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) fail_key(key, "expected true or false");
      out = v->get<bool>();
    }
  }

  template <class E>
  void choice(const char* key, E& out, const EnumTable<E>& table) {
    if (const json* v = find(key)) {
      if (!v->is_string()) fail_key(key, "expected a string");
      const auto s = v->get<std::string>();
      for (const auto& [value, name] : table) {
        if (s == name) {
          out = value;
          return;
        }
      }
      fail_key(key, "unknown value '" + s + "'");
    }
  }

  template <class Tag>
  void optional_num(const char* key, std::optional<Quantity<Tag>>& out) {
    if (const json* v = find(key)) {
      if (v->is_null()) {
        out.reset();
        return;
      }
      Quantity<Tag> q = out.value_or(Quantity<Tag>(0.0));
      num(key, q);
      out = q;
    }
  }

  template <class F>
  void object(const char* key, F&& f) {
    if (const json* v = find(key)) {
      Reader sub(*v, where(key));
      f(sub);
      sub.finish();
    }
  }

  template <class T, class F>
  void optional_object(const char* key, std::optional<T>& out, F&& f) {
    if (const json* v = find(key)) {
      if (v->is_null()) {
        out.reset();
        return;
      }
      if (!out) out.emplace();
      Reader sub(*v, where(key));
      f(sub, *out);
      sub.finish();
    }
  }

  void numbers(const char* key, std::vector<double>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) fail_key(key, "expected an array of numbers");
      std::vector<double> items;
      for (const auto& x : *v) {
        if (!x.is_number()) fail_key(key, "expected an array of numbers");
        items.push_back(x.get<double>());
      }
      out = std::move(items);
    }
  }

  template <class T, class F>
  void object_list(const char* key, std::vector<T>& out, F&& f) {
    if (const json* v = find(key)) {
      if (!v->is_array()) fail_key(key, "expected an array");
      std::vector<T> items;
      for (std::size_t i = 0; i < v->size(); ++i) {
        T item{};
        Reader sub((*v)[i], where(key) + "[" + std::to_string(i) + "]");
        f(sub, item);
        sub.finish();
        items.push_back(item);
      }
      out = std::move(items);
    }
  }

  // Object whose keys name chip segments.
  void segment_losses(const char* key, ChipLayout& chip) {
    if (const json* v = find(key)) {
      if (!v->is_object()) fail_key(key, "expected an object");
      for (const auto& [name, value] : v->items()) {
        auto& segs = chip.segments();
        auto it = std::find_if(segs.begin(), segs.end(),
                               [&](const ChipSegment& s) { return segment_key(s) == name; });
        if (it == segs.end()) throw ConfigError("unknown chip segment '" + where(key) + "." + name + "'");
        if (value.is_null()) {
          it->element.loss.reset();
        } else if (value.is_number()) {
          it->element.loss = Decibels(value.get<double>());
        } else {
          throw ConfigError(where(key) + "." + name + ": expected a number or null");
        }
      }
    }
  }

 private:
  const json* find(const char* key) {
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }
  std::string where(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError((path_.empty() ? "document" : path_) + ": " + msg);
  }
  [[noreturn]] void fail_key(const char* key, const std::string& msg) const {
    throw ConfigError(where(key) + ": " + msg);
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

class Writer {
 public:
  static constexpr bool kReading = false;

  explicit Writer(ordered_json& j) : j_(j) { j_ = ordered_json::object(); }

  void num(const char* key, double& v) { j_[key] = v; }
  template <class Tag>
  void num(const char* key, Quantity<Tag>& q) {
    j_[key] = q.value();
  }
  void count(const char* key, std::uint64_t& v) { j_[key] = v; }
  void flag(const char* key, bool& v) { j_[key] = v; }
  template <class E>
  void choice(const char* key, E& v, const EnumTable<E>& table) {
    for (const auto& [value, name] : table) {
      if (value == v) j_[key] = name;
    }
  }
  template <class Tag>
  void optional_num(const char* key, std::optional<Quantity<Tag>>& q) {
    if (q) j_[key] = q->value();
    else j_[key] = nullptr;
  }
  template <class F>
  void object(const char* key, F&& f) {
    ordered_json sub;
    Writer w(sub);
    f(w);
    j_[key] = std::move(sub);
  }
  template <class T, class F>
  void optional_object(const char* key, std::optional<T>& v, F&& f) {
    if (!v) {
      j_[key] = nullptr;
      return;
    }
    ordered_json sub;
    Writer w(sub);
    f(w, *v);
    j_[key] = std::move(sub);
  }
  void numbers(const char* key, std::vector<double>& v) { j_[key] = v; }
  template <class T, class F>
  void object_list(const char* key, std::vector<T>& items, F&& f) {
    ordered_json arr = ordered_json::array();
    for (auto& item : items) {
      ordered_json sub;
      Writer w(sub);
      f(w, item);
      arr.push_back(std::move(sub));
    }
    j_[key] = std::move(arr);
  }
  void segment_losses(const char* key, ChipLayout& chip) {
    ordered_json sub = ordered_json::object();
    for (const auto& s : chip.segments()) {
      if (s.element.loss) sub[segment_key(s)] = s.element.loss->value();
      else sub[segment_key(s)] = nullptr;
    }
    j_[key] = std::move(sub);
  }
  void finish() const {}

 private:
  ordered_json& j_;
};

// ---------------------------------------------------------------------------
// Schema, shared by reading and writing.

template <class V>
void visit_grid(V& v, Grid& g) {
  v.num("start", g.start);
  v.num("stop", g.stop);
  v.num("step", g.step);
}

template <class V>
void visit_detector(V& v, DetectorModel& d) {
  v.num("efficiency", d.efficiency);
  v.num("dark_prob_per_ns", d.dark_prob_per_ns);
  v.num("gate_window_ns", d.gate_window);
}

template <class V>
void visit_source(V& v, SpdcSource& s) {
  Nanometers center = s.spectrum.center_wavelength();
  Picometers width = s.spectrum.fwhm_bandwidth();
  Lineshape shape = s.spectrum.lineshape();
  v.num("center_wavelength_nm", center);
  v.num("bandwidth_pm", width);
  v.choice("lineshape", shape, kLineshapes);
  v.num("pairs_per_mw", s.pairs_per_mw);
  v.num("pump_power_mw", s.pump_power);
  v.choice("statistics", s.statistics, kFamilies);
  v.numbers("custom_pmf", s.custom_pmf);
  if constexpr (V::kReading) {
    try {
      s.spectrum = SpectralMode(center, width, shape);
    } catch (const DomainError& e) {
      throw ConfigError(std::string("source spectrum: ") + e.what());
    }
  }
}

template <class V>
void visit_filter(V& v, Filter& f) {
  v.num("center_wavelength_nm", f.center);
  v.num("bandwidth_pm", f.fwhm);
  v.num("insertion_loss_db", f.insertion_loss);
}

template <class V>
void visit_herald(V& v, HeraldModel& h) {
  v.num("efficiency", h.efficiency);
  v.num("dark_probability", h.dark_probability);
}

template <class V>
void visit_coupler(V& v, CouplerConfig& c) {
  v.num("coupling_strength_times_length_rad", c.options.coupling_strength_times_length);
  v.num("interaction_length_mm", c.options.interaction_length);
  v.flag("fit_coupling_strength", c.options.fit_coupling_strength);
  v.num("operating_voltage_V", c.operating_voltage);
  v.object_list("anchors", c.anchors, [](auto& a, CalibrationAnchor& anchor) {
    a.num("voltage_V", anchor.voltage);
    a.num("cross_ratio", anchor.cross_ratio);
  });
}

template <class V>
void visit_config(V& v, ScenarioConfig& c) {
  Scenario& s = c.scenario;
  v.object("pump", [&](auto& o) {
    o.num("repetition_rate_hz", s.repetition_rate);
    o.num("gating_rate_hz", s.gating_rate);
    o.num("pulse_duration_ps", s.pump_duration);
  });
  v.object("external_source", [&](auto& o) { visit_source(o, s.external_source); });
  v.object("chip_source", [&](auto& o) { visit_source(o, s.chip_source); });
  v.num("external_link_loss_db", s.external_link_loss);
  v.object("filters", [&](auto& o) {
    o.object("a", [&](auto& f) { visit_filter(f, s.filter_a); });
    o.object("b", [&](auto& f) { visit_filter(f, s.filter_b); });
    o.object("c", [&](auto& f) { visit_filter(f, s.filter_c); });
  });
  v.object("chip", [&](auto& o) {
    o.optional_num("measured_insertion_loss_db", s.chip.measured_insertion_loss);
    o.segment_losses("segment_loss_db", s.chip);
  });
  v.object("couplers", [&](auto& o) {
    o.object("router", [&](auto& k) { visit_coupler(k, c.router); });
    o.object("bell", [&](auto& k) { visit_coupler(k, c.bell); });
  });
  v.object("detectors", [&](auto& o) {
    o.object("a", [&](auto& d) { visit_detector(d, s.detector_a); });
    o.object("b", [&](auto& d) { visit_detector(d, s.detector_b); });
    o.object("c", [&](auto& d) { visit_detector(d, s.detector_c); });
    o.optional_object("monitor", s.monitor,
                      [](auto& d, DetectorModel& m) { visit_detector(d, m); });
    o.num("monitor_loss_db", s.monitor_loss);
  });
  v.object("hom", [&](auto& o) {
    o.num("delay_mm", s.delay);
    o.num("dip_fwhm_ps", s.dip_fwhm);
    o.object("positions_mm", [&](auto& g) { visit_grid(g, c.dip_positions_mm); });
  });
  v.object("run", [&](auto& o) { o.count("pulses", c.pulses); });
  v.object("link", [&](auto& o) {
    LinkParams& l = c.link;
    o.num("fiber_loss_db_per_km", l.fiber_loss_db_per_km);
    o.object("detector", [&](auto& d) { visit_detector(d, l.detector); });
    o.num("pulse_rate_hz", l.pulse_rate);
    o.num("mean_photon_per_pulse", l.mean_photon_per_pulse);
    o.num("teleport_fidelity", l.teleport_fidelity);
    o.num("chip_insertion_loss_db", l.chip_insertion_loss);
    o.num("local_pair_mean", l.local_pair_mean);
    o.flag("include_multipair", l.include_multipair);
    o.choice("criterion", c.criterion.kind, kCriteria);
    o.num("qber_limit", c.criterion.qber_limit);
    o.object("distances_km", [&](auto& g) { visit_grid(g, c.distances_km); });
  });
  v.object("visibility_map", [&](auto& o) {
    o.object("n_a", [&](auto& g) { visit_grid(g, c.map_n_a); });
    o.object("n_b", [&](auto& g) { visit_grid(g, c.map_n_b); });
    o.optional_object("herald_a", c.map_options.herald_a,
                      [](auto& h, HeraldModel& m) { visit_herald(h, m); });
    o.optional_object("herald_b", c.map_options.herald_b,
                      [](auto& h, HeraldModel& m) { visit_herald(h, m); });
  });
  v.object("spectrum", [&](auto& o) {
    o.object("wavelength_nm", [&](auto& g) { visit_grid(g, c.spectrum_nm); });
  });
  v.object("coupler_curve", [&](auto& o) {
    o.object("voltage_V", [&](auto& g) { visit_grid(g, c.coupler_voltage_V); });
  });
}

}  // namespace

std::vector<double> Grid::values() const {
  constexpr double kMaxPoints = 1e6;
  if (!(step > 0.0)) throw ConfigError("grid step must be positive");
  if (!(stop >= start)) throw ConfigError("grid stop must not precede its start");
  const double span = (stop - start) / step;
  if (span + 1.0 > kMaxPoints) throw ConfigError("grid has too many points");
  const auto n = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = start + static_cast<double>(i) * step;
  return out;
}

ScenarioConfig parse_config(std::string_view text, const ScenarioConfig& base) {
  json doc;
  try {
    doc = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed document: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("document: expected an object");
  const auto version = doc.find("schema_version");
  if (version == doc.end()) throw ConfigError("schema_version is required");
  if (!version->is_number_integer() || version->get<int>() != kSchemaVersion) {
    throw ConfigError("unsupported schema_version " + version->dump() + " (expected " +
                      std::to_string(kSchemaVersion) + ")");
  }
  json body = doc;
  body.erase("schema_version");
  ScenarioConfig out = base;
  Reader r(body, "");
  visit_config(r, out);
  r.finish();
  for (const auto& [name, grid] :
       {std::pair{"link.distances_km", &out.distances_km}, {"visibility_map.n_a", &out.map_n_a},
        {"visibility_map.n_b", &out.map_n_b}, {"spectrum.wavelength_nm", &out.spectrum_nm},
        {"coupler_curve.voltage_V", &out.coupler_voltage_V},
        {"hom.positions_mm", &out.dip_positions_mm}}) {
    try {
      (void)grid->values();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(name) + ": " + e.what());
    }
  }
  return out;
}

std::string serialize_config(const ScenarioConfig& config) {
  ScenarioConfig copy = config;
  ordered_json body;
  Writer w(body);
  visit_config(w, copy);
  ordered_json doc;
  doc["schema_version"] = kSchemaVersion;
  for (auto& [key, value] : body.items()) doc[key] = value;
  return doc.dump(2) + "\n";
}

Scenario build_scenario(const ScenarioConfig& config) {
  Scenario s = config.scenario;
  s.router = calibrate_coupler(config.router.anchors, config.router.options);
  s.router_voltage = config.router.operating_voltage;
  s.bell_coupler = calibrate_coupler(config.bell.anchors, config.bell.options);
  s.bell_voltage = config.bell.operating_voltage;
  s.validate();
  return s;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, text] : detail::embedded_presets()) out.push_back(name);
    return out;
  }();
  return names;
}

std::string_view preset_text(std::string_view name) {
  for (const auto& [n, text] : detail::embedded_presets()) {
    if (n == name) return text;
  }
  throw ConfigError("unknown preset '" + std::string(name) + "'");
}

}  // namespace qrelay
