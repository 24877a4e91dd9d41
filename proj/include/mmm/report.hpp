#pragma once

#include <deque>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace mmm {

/// Named columns and rows of JSON scalars.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<nlohmann::json>> rows;

  void add(std::vector<nlohmann::json> row) { rows.push_back(std::move(row)); }
  std::size_t column(const std::string& c) const;
  /// Numeric values of one column (non-numbers become NaN).
  std::vector<double> numbers(const std::string& c) const;
};

struct Flag {
  std::string name;
  bool value = false;
  std::string detail;
};

struct ConvergenceReport {
  std::string title;
  std::vector<std::string> notes;
  std::deque<Table> tables;  // stable references from table()
  std::vector<Flag> flags;
  std::map<std::string, double> scalars;

  Table& table(const std::string& name, std::vector<std::string> columns);
  const Table& get(const std::string& name) const;
  bool has(const std::string& name) const;
  void flag(std::string name, bool value, std::string detail = {});
  /// Throws std::out_of_range for unknown flags.
  bool flag_value(const std::string& name) const;
};

nlohmann::json to_json(const ConvergenceReport& r);
nlohmann::json to_json(const Table& t);

/// RFC 4180 CSV with a header row; numbers in shortest round-trip form.
std::string to_csv(const Table& t);

/// Polyline chart of `y` against `x`, one line per distinct `series` value
/// (empty `series` draws a single line).
std::string to_svg(const Table& t, const std::string& x, const std::string& y,
                   const std::string& series = {});

enum class OutputFormat { Csv, Json, Both };

OutputFormat parse_format(const std::string& s);

/// Writes <stem>.json and/or <stem>_<table>.csv; returns the written paths.
std::vector<std::filesystem::path> write_report(const ConvergenceReport& r,
                                                const std::filesystem::path& dir,
                                                const std::string& stem, OutputFormat fmt);

/// Shortest decimal text that reads back as the same double.
std::string format_number(double v);

}  // namespace mmm
