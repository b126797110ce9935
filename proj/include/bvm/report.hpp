#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

namespace bvm {

using Cell = std::variant<std::int64_t, double, std::string, bool>;

/// Exactly 17 significant digits, locale independent.
std::string format_double(double x);
std::string format_cell(const Cell& c);

/// Tabular experiment result.
struct ExperimentReport {
  std::string name;
  std::string kind;
  std::vector<std::pair<std::string, std::string>> params;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::string verdict;
  std::vector<std::string> notes;

  void add_param(std::string key, std::string value);
  void add_param(std::string key, double value);
  void add_param(std::string key, std::int64_t value);
  void add_row(std::vector<Cell> row);
  /// Index of a named column; throws if absent.
  std::size_t column(const std::string& name) const;
  double number(std::size_t row, const std::string& col) const;

  /// The first line is a "# generated ..." timestamp comment unless disabled;
  /// everything after it is a deterministic function of the report.
  std::string to_csv(bool with_timestamp = true) const;
  nlohmann::json to_json() const;
};

/// Writes to a temporary sibling and renames over `path`.
void write_atomically(const std::filesystem::path& path, const std::string& content);

/// Writes NAME.csv and NAME.json under `dir`.
void write_report(const std::filesystem::path& dir, const ExperimentReport& report);

}  // namespace bvm
