#include "ncmd/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <Eigen/Core>
#include <boost/version.hpp>

namespace ncmd {

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw std::logic_error("Table " + name + ": row width does not match the header");
  rows.push_back(std::move(row));
}

bool RunReport::pass() const {
  for (const auto& v : verdicts)
    if (!v.pass) return false;
  return !verdicts.empty();
}

Table& RunReport::table(const std::string& name, std::vector<std::string> columns) {
  for (auto& t : tables)
    if (t.name == name) throw std::logic_error("duplicate table " + name);
  tables.push_back({name, std::move(columns), {}});
  return tables.back();
}

void RunReport::verdict(std::string check, bool pass, std::string detail, std::string table) {
  verdicts.push_back({std::move(check), pass, std::move(detail), std::move(table)});
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";  // folds -0
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string format_cell(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
  return std::get<std::string>(c);
}

std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) out += (i ? "," : "") + table.columns[i];
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_cell(row[i]);
    out += '\n';
  }
  return out;
}

namespace {

nlohmann::json cell_json(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) {
    if (std::isfinite(*d)) return *d;
    return format_number(*d);
  }
  return std::get<std::string>(c);
}

}  // namespace

nlohmann::json to_json(const RunReport& report) {
  nlohmann::json j;
  j["id"] = report.id;
  j["family"] = report.family;
  j["seed"] = report.seed;
  j["config_path"] = report.config_path;
  j["config"] = report.config;
  j["pass"] = report.pass();
  j["verdicts"] = nlohmann::json::array();
  for (const auto& v : report.verdicts)
    j["verdicts"].push_back({{"check", v.check}, {"pass", v.pass}, {"detail", v.detail}, {"table", v.table}});
  j["tables"] = nlohmann::json::array();
  for (const auto& t : report.tables) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : t.rows) {
      nlohmann::json row = nlohmann::json::array();
      for (const auto& c : r) row.push_back(cell_json(c));
      rows.push_back(std::move(row));
    }
    j["tables"].push_back({{"name", t.name},
                           {"file", report.id + "." + t.name + ".csv"},
                           {"columns", t.columns},
                           {"rows", std::move(rows)}});
  }
  j["versions"] = {{"ncmd", "1.0.0"},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"boost", BOOST_LIB_VERSION}};
  j["timing"] = {{"seconds", report.seconds}};
  return j;
}

std::vector<std::filesystem::path> write_report(const RunReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::filesystem::path& path, const std::string& body) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << body;
    written.push_back(path);
  };
  for (const auto& t : report.tables) put(dir / (report.id + "." + t.name + ".csv"), to_csv(t));
  put(dir / (report.id + ".report.json"), to_json(report).dump(2) + "\n");
  return written;
}

}  // namespace ncmd
