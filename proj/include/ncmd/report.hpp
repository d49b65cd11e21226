#pragma once

// Tables, verdicts and the on-disk report format of an experiment run.

#include <deque>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace ncmd {

using Cell = std::variant<double, std::string>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row);
};

struct Verdict {
  std::string check;
  bool pass = false;
  std::string detail;
  std::string table;  // table backing the verdict
};

struct RunReport {
  std::string id;
  std::string family;
  std::uint64_t seed = 0;
  std::string config_path;
  nlohmann::json config;  // parsed config echo
  std::vector<Verdict> verdicts;
  std::deque<Table> tables;
  double seconds = 0.0;

  bool pass() const;
  Table& table(const std::string& name, std::vector<std::string> columns);
  void verdict(std::string check, bool pass, std::string detail, std::string table = {});
};

/// Fixed formatting for numeric cells: "%.12g", with "inf", "-inf", "nan".
std::string format_number(double v);
std::string format_cell(const Cell& c);

/// CSV body with header row and LF line endings.
std::string to_csv(const Table& table);
nlohmann::json to_json(const RunReport& report);

/// Writes <id>.report.json and <id>.<table>.csv under `dir`; returns the
/// paths written.
std::vector<std::filesystem::path> write_report(const RunReport& report, const std::filesystem::path& dir);

}  // namespace ncmd
