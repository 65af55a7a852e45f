#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "qrelay/interference.hpp"
#include "qrelay/link_budget.hpp"
#include "qrelay/montecarlo.hpp"

namespace qrelay {

/// printf("%.10g") in the C locale; "nan", "inf", "-inf" for non-finite values.
std::string format_number(double v);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
  void add_numbers(const std::vector<double>& row);
};

/// Ordered key = value pairs.
struct Summary {
  std::vector<std::pair<std::string, std::string>> entries;

  void add(std::string key, std::string value) { entries.emplace_back(std::move(key), std::move(value)); }
  void add(std::string key, double value) { add(std::move(key), format_number(value)); }
  void add(std::string key, std::uint64_t value) { add(std::move(key), std::to_string(value)); }
  void add(std::string key, bool value) { add(std::move(key), std::string(value ? "true" : "false")); }
  void add(std::string key, const char* value) { add(std::move(key), std::string(value)); }
};

/// Header row plus data rows, comma separated, '\n' terminated.
void write_csv(std::ostream& out, const Table& table);
/// `key = value` lines.
void write_summary(std::ostream& out, const Summary& summary);
/// "[summary]" section, blank line, "[table]" section with the CSV.
void write_structured(std::ostream& out, const Summary& summary, const Table& table);

Table visibility_map_table(const std::vector<VisibilityMapEntry>& entries);

Table sweep_table(const SweepResult& result);
Summary sweep_summary(const SweepResult& result);

Table dip_table(const DipProfile& profile);
Summary dip_summary(const DipScan& scan, bool analytic);

/// Every field of the report, in a fixed order.
Summary counts_summary(const CountsReport& report);
/// Same fields as a two-column (quantity,value) table.
Table counts_table(const CountsReport& report);

}  // namespace qrelay
