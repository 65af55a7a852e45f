// qrelay: command-line front end for the relay-chip models.
#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "qrelay/config.hpp"
#include "qrelay/errors.hpp"
#include "qrelay/interference.hpp"
#include "qrelay/link_budget.hpp"
#include "qrelay/montecarlo.hpp"
#include "qrelay/optics.hpp"
#include "qrelay/report.hpp"

namespace {

using namespace qrelay;

struct Options {
  std::string config_path;
  std::string preset;
  std::string anchors_path;
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> pulses;
  unsigned workers = 0;
  std::string out_path;
  std::string format = "csv";
};

struct Output {
  Summary summary;
  Table table;
};

// Visibility used as the comparison point for the operating-point report.
constexpr double kReferenceVisibility = 0.75;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ScenarioConfig load_config(const Options& o) {
  ScenarioConfig cfg;
  if (!o.preset.empty()) cfg = parse_config(preset_text(o.preset), cfg);
  if (!o.config_path.empty()) cfg = parse_config(read_file(o.config_path), cfg);
  if (!o.anchors_path.empty()) {
    std::istringstream in(read_file(o.anchors_path));
    const auto anchors = read_anchor_csv(in);
    cfg.router.anchors = anchors;
    cfg.bell.anchors = anchors;
  }
  if (o.pulses) cfg.pulses = *o.pulses;
  return cfg;
}

Output spdc_spectrum(const ScenarioConfig& cfg) {
  const auto& src = cfg.scenario.chip_source;
  const auto grid = cfg.spectrum_nm.values();
  std::vector<double> density(grid.size());
  spdc_spectral_density(src, grid, density);
  Output out;
  out.table.header = {"wavelength_nm", "relative_density"};
  for (std::size_t i = 0; i < grid.size(); ++i) out.table.add_numbers({grid[i], density[i]});
  out.summary.add("center_wavelength_nm", src.spectrum.center_wavelength().value());
  out.summary.add("fwhm_nm", to_nanometers(src.spectrum.fwhm_bandwidth()).value());
  out.summary.add("lineshape", src.spectrum.lineshape() == Lineshape::gaussian ? "gaussian"
                                                                               : "sinc_squared");
  out.summary.add("filter_a_overlap", filter_overlap(src, cfg.scenario.filter_a));
  out.summary.add("filter_c_overlap", filter_overlap(src, cfg.scenario.filter_c));
  return out;
}

Output coupler_curve(const ScenarioConfig& cfg) {
  const auto volts = cfg.coupler_voltage_V.values();
  Output out;
  out.table.header = {"coupler", "voltage_V", "cross_ratio"};
  for (auto [name, c] : {std::pair{"router", &cfg.router}, std::pair{"bell", &cfg.bell}}) {
    const CouplerModel m = calibrate_coupler(c->anchors, c->options);
    for (double v : volts) {
      out.table.add({name, format_number(v), format_number(m.cross_ratio(Volts(v)))});
    }
    const std::string p = std::string(name) + ".";
    out.summary.add(p + "coupling_strength_times_length_rad", m.coupling_strength_times_length);
    out.summary.add(p + "detuning_per_volt_rad", m.detuning_per_volt);
    out.summary.add(p + "detuning_constrained", m.detuning_constrained);
    out.summary.add(p + "fit_residual", m.fit_residual);
    out.summary.add(p + "operating_voltage_V", c->operating_voltage.value());
    out.summary.add(p + "cross_ratio_at_operating", m.cross_ratio(c->operating_voltage));
    out.summary.add(p + "detuning_ratio_at_operating", m.detuning_ratio(c->operating_voltage));
  }
  return out;
}

Output visibility_map_cmd(const ScenarioConfig& cfg) {
  const auto na = cfg.map_n_a.values();
  const auto nb = cfg.map_n_b.values();
  Output out;
  out.table = visibility_map_table(visibility_map(na, nb, cfg.map_options));

  const double n_a = cfg.scenario.external_source.mean_pairs();
  const double n_b = cfg.scenario.chip_source.mean_pairs();
  auto at = [&](const std::optional<HeraldModel>& herald_b) {
    const VisibilityMapOptions o{cfg.map_options.herald_a, herald_b};
    const double a[] = {n_a};
    const double b[] = {n_b};
    // Scenarios without sources have no operating point; the map still stands.
    try {
      return visibility_map(a, b, o).front().visibility;
    } catch (const ConditioningError&) {
    } catch (const UndefinedVisibilityError&) {
    }
    return std::numeric_limits<double>::quiet_NaN();
  };
  const double v = at(cfg.map_options.herald_b);
  out.summary.add("operating_n_a", n_a);
  out.summary.add("operating_n_b", n_b);
  out.summary.add("operating_visibility", v);
  out.summary.add("weak_herald_visibility", at(HeraldModel{0.0, 0.0}));
  out.summary.add("ideal_herald_visibility", at(HeraldModel{1.0, 0.0}));
  out.summary.add("unheralded_visibility", at(std::nullopt));
  out.summary.add("reference_visibility", kReferenceVisibility);
  out.summary.add("gap_to_reference", kReferenceVisibility - v);
  return out;
}

Output hom_dip(const ScenarioConfig& cfg, const Options& o) {
  const Scenario s = build_scenario(cfg);
  const auto positions = cfg.dip_positions_mm.values();
  const DipScan scan = scan_dip(s, positions, cfg.pulses, o.seed, {o.workers});
  Output out;
  out.table = dip_table(scan.profile);
  out.summary = dip_summary(scan, cfg.pulses == 0);
  out.summary.add("expected_fwhm_mm", delay_to_path(s.dip_fwhm).value());
  out.summary.add("predicted_visibility", predicted_visibility(s));
  return out;
}

Output keyrate_sweep(const ScenarioConfig& cfg) {
  const auto models = comparison_models(cfg.link.chip_insertion_loss);
  const auto distances = cfg.distances_km.values();
  const SweepResult r = sweep(models, cfg.link, distances, cfg.criterion);
  Output out;
  out.table = sweep_table(r);
  out.summary = sweep_summary(r);
  out.summary.add("pulse_rate_hz", cfg.link.pulse_rate.value());
  return out;
}

Output mc_run(const ScenarioConfig& cfg, const Options& o) {
  const Scenario s = build_scenario(cfg);
  const CountsReport r = run(s, cfg.pulses, o.seed, {o.workers});
  Output out;
  out.table = counts_table(r);
  out.summary.add("gated_pulses", r.gated_pulses);
  out.summary.add("raw_visibility", r.raw_visibility.value);
  out.summary.add("net_visibility", r.net_visibility.value);
  out.summary.add("analytic_visibility", r.analytic_visibility);
  return out;
}

void emit(const Output& result, const Options& o) {
  std::ofstream file;
  if (!o.out_path.empty()) {
    file.open(o.out_path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot write '" + o.out_path + "'");
  }
  std::ostream& data = o.out_path.empty() ? std::cout : file;
  if (o.format == "structured-text") {
    write_structured(data, result.summary, result.table);
  } else {
    write_csv(data, result.table);
    // Keep stdout pure CSV when it carries the table.
    write_summary(o.out_path.empty() ? std::cerr : std::cout, result.summary);
  }
  data.flush();
  if (!data) throw IoError("failed writing output");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum relay chip simulator"};
  app.require_subcommand(1);
  Options o;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"spdc-spectrum", "Emission spectrum of the on-chip pair source"},
      {"coupler-curve", "Calibrated cross ratio against voltage for both couplers"},
      {"visibility-map", "Maximal dip visibility over the mean pair numbers"},
      {"hom-dip", "Three-fold dip scan and gaussian fit (--pulses 0: expected values)"},
      {"keyrate-sweep", "Normalized rate against distance for the link variants"},
      {"mc-run", "Monte Carlo counts at one delay"},
  };
  std::vector<std::string> preset_choices = preset_names();
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config_path, "Scenario document (JSON)")
        ->check(CLI::ExistingFile);
    sub->add_option("--preset", o.preset, "Committed parameter set")
        ->check(CLI::IsMember(preset_choices));
    sub->add_option("--anchors", o.anchors_path,
                    "Coupler calibration CSV (voltage_V,cross_ratio), used for both couplers")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Random seed")->capture_default_str();
    sub->add_option("--pulses", o.pulses, "Laser pulses (per scan position for hom-dip)");
    sub->add_option("--workers", o.workers, "Worker threads, 0 = all cores")
        ->capture_default_str();
    sub->add_option("--out", o.out_path, "Output file (default: stdout)");
    sub->add_option("--format", o.format, "Output format")
        ->check(CLI::IsMember({"csv", "structured-text"}))
        ->capture_default_str();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    for (char& c : msg) {
      if (c == '\n') c = ' ';
    }
    std::cerr << "error: usage: " << msg << '\n';
    return 2;
  }

  try {
    const std::string cmd = app.get_subcommands().front()->get_name();
    const ScenarioConfig cfg = load_config(o);
    Output result;
    if (cmd == "spdc-spectrum") result = spdc_spectrum(cfg);
    else if (cmd == "coupler-curve") result = coupler_curve(cfg);
    else if (cmd == "visibility-map") result = visibility_map_cmd(cfg);
    else if (cmd == "hom-dip") result = hom_dip(cfg, o);
    else if (cmd == "keyrate-sweep") result = keyrate_sweep(cfg);
    else result = mc_run(cfg, o);
    emit(result, o);
  } catch (const qrelay::Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
