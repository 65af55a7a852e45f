#include "qrelay/report.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace qrelay {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void Table::add_numbers(const std::vector<double>& row) {
  std::vector<std::string> cells;
  cells.reserve(row.size());
  for (double v : row) cells.push_back(format_number(v));
  rows.push_back(std::move(cells));
}

namespace {

void write_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << cells[i];
  }
  out << '\n';
}

}  // namespace

void write_csv(std::ostream& out, const Table& table) {
  write_row(out, table.header);
  for (const auto& r : table.rows) write_row(out, r);
}

void write_summary(std::ostream& out, const Summary& summary) {
  for (const auto& [k, v] : summary.entries) out << k << " = " << v << '\n';
}

void write_structured(std::ostream& out, const Summary& summary, const Table& table) {
  out << "[summary]\n";
  write_summary(out, summary);
  out << "\n[table]\n";
  write_csv(out, table);
}

Table visibility_map_table(const std::vector<VisibilityMapEntry>& entries) {
  Table t{{"N_a", "N_b", "visibility"}, {}};
  for (const auto& e : entries) t.add_numbers({e.n_a, e.n_b, e.visibility});
  return t;
}

Table sweep_table(const SweepResult& r) {
  Table t;
  t.header.push_back("distance_km");
  for (const auto& n : r.model_names) t.header.push_back(n);
  for (std::size_t i = 0; i < r.distances_km.size(); ++i) {
    std::vector<double> row{r.distances_km[i]};
    for (const auto& col : r.normalized_rate) row.push_back(col[i]);
    t.add_numbers(row);
  }
  return t;
}

Summary sweep_summary(const SweepResult& r) {
  Summary s;
  for (std::size_t m = 0; m < r.model_names.size(); ++m) {
    const auto& name = r.model_names[m];
    s.add(name + ".max_distance_km", r.reach[m].km);
    s.add(name + ".unbounded", r.reach[m].unbounded);
    s.add(name + ".relay_position", r.reach[m].relay_position);
    s.add(name + ".midpoint_max_distance_km", r.midpoint_reach[m].km);
    s.add(name + ".distance_gain", r.distance_gain[m]);
  }
  return s;
}

Table dip_table(const DipProfile& p) {
  Table t{{"position_mm", "rate", "error"}, {}};
  for (const auto& s : p.samples) t.add_numbers({s.position_mm, s.rate, s.error});
  return t;
}

Summary dip_summary(const DipScan& scan, bool analytic) {
  Summary s;
  s.add("mode", analytic ? "analytic" : "monte_carlo");
  s.add("points", static_cast<std::uint64_t>(scan.points.size()));
  s.add("fit_converged", scan.profile.fit.has_value());
  if (const auto& f = scan.profile.fit) {
    s.add("visibility", f->visibility);
    s.add("visibility_error", f->visibility_error);
    s.add("fwhm_mm", f->fwhm_mm);
    s.add("fwhm_error_mm", f->fwhm_error_mm);
    s.add("fwhm_ps", path_to_delay(Millimeters(f->fwhm_mm)).value());
    s.add("baseline", f->baseline);
    s.add("center_mm", f->center_mm);
    s.add("chi2", f->chi2);
    s.add("degrees_of_freedom", static_cast<std::uint64_t>(std::max(f->degrees_of_freedom, 0)));
  } else {
    s.add("fit_failure", scan.profile.fit_failure);
  }
  return s;
}

Summary counts_summary(const CountsReport& r) {
  Summary s;
  s.add("pulses_simulated", r.pulses_simulated);
  s.add("gated_pulses", r.gated_pulses);
  s.add("delay_mm", r.delay_mm);
  s.add("overlap", r.overlap);
  for (auto [name, t] : {std::pair{"at_delay", &r.at_delay}, std::pair{"reference", &r.reference}}) {
    const std::string p = std::string(name) + ".";
    s.add(p + "singles_a", t->singles[kDetA]);
    s.add(p + "singles_b", t->singles[kDetB]);
    s.add(p + "singles_c", t->singles[kDetC]);
    s.add(p + "twofold_ab", t->ab);
    s.add(p + "twofold_ac", t->ac);
    s.add(p + "twofold_bc", t->bc);
    s.add(p + "threefold", t->abc);
  }
  for (auto [name, n] : {std::pair{"at_delay", &r.net_at_delay},
                         std::pair{"reference", &r.net_reference}}) {
    const std::string p = std::string(name) + ".";
    s.add(p + "accidentals", n->accidental);
    s.add(p + "accidentals_error", n->accidental_error);
    s.add(p + "net_threefold", n->net);
    s.add(p + "net_threefold_error", n->net_error);
  }
  s.add("monitor_singles", r.monitor_singles);
  s.add("raw_visibility", r.raw_visibility.value);
  s.add("raw_visibility_error", r.raw_visibility.error);
  s.add("net_visibility", r.net_visibility.value);
  s.add("net_visibility_error", r.net_visibility.error);
  s.add("analytic_visibility", r.analytic_visibility);
  for (auto [name, ph] : {std::pair{"at_delay", &r.photons_at_delay},
                          std::pair{"reference", &r.photons_reference}}) {
    const std::string p = std::string(name) + ".photons_";
    s.add(p + "generated", ph->generated);
    s.add(p + "detected", ph->detected);
    s.add(p + "undetected", ph->undetected);
    s.add(p + "lost", ph->lost);
  }
  return s;
}

Table counts_table(const CountsReport& r) {
  Table t{{"quantity", "value"}, {}};
  for (const auto& [k, v] : counts_summary(r).entries) t.add({k, v});
  return t;
}

}  // namespace qrelay
