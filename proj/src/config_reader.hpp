#pragma once

// Checked access to YAML maps with line-numbered diagnostics. Internal to the
// library.

#include <functional>
#include <set>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "ncmd/config.hpp"
#include "ncmd/rng.hpp"

namespace ncmd::detail {

struct ConfigDocument {
  YAML::Node root;
  std::string source;
};

struct Constraint {
  std::function<bool(double)> ok;
  std::string text;  // e.g. "must lie in (0,1)"
};

Constraint any_number();
Constraint open_interval(double lo, double hi);
Constraint closed_interval(double lo, double hi);
Constraint half_open(double lo, double hi);  // (lo, hi]
Constraint positive();
Constraint at_least(double lo);

class MapReader {
 public:
  MapReader(YAML::Node node, std::string path, std::string source);

  bool has(const std::string& key) const;
  [[noreturn]] void fail(const std::string& key, const std::string& message) const;
  [[noreturn]] void fail_here(const std::string& message) const;
  int line_of(const std::string& key) const;
  /// Entries of a list field, 1 for a scalar, 0 when absent. Does not mark the key as read.
  std::size_t length(const std::string& key) const;
  const std::string& path() const { return path_; }

  double number(const std::string& key, const Constraint& c = any_number());
  double number(const std::string& key, double fallback, const Constraint& c = any_number());
  std::uint64_t count(const std::string& key, std::uint64_t min = 0);
  std::uint64_t count(const std::string& key, std::uint64_t fallback, std::uint64_t min);
  std::string text(const std::string& key);
  std::string text(const std::string& key, const std::string& fallback);
  std::string choice(const std::string& key, const std::vector<std::string>& options);
  std::string choice(const std::string& key, const std::vector<std::string>& options, const std::string& fallback);
  bool flag(const std::string& key, bool fallback);
  Vector vector(const std::string& key, std::size_t dim = 0);
  Matrix matrix(const std::string& key, std::size_t dim);
  std::vector<double> numbers(const std::string& key, const Constraint& c = any_number());
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback, const Constraint& c = any_number());
  /// Explicit list of points or {lo, hi, points[, direction][, offset]}.
  std::vector<Vector> grid(const std::string& key, std::size_t dim);
  std::vector<Vector> grid(const std::string& key, std::size_t dim, const std::vector<Vector>& fallback);
  MapReader map(const std::string& key);
  std::vector<MapReader> maps(const std::string& key);

  /// Throws on keys that were never read.
  void finish() const;

 private:
  YAML::Node get(const std::string& key);
  double scalar_number(const YAML::Node& n, const std::string& field) const;
  Vector node_vector(const YAML::Node& n, const std::string& field, std::size_t dim) const;
  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  [[noreturn]] void fail_node(const YAML::Node& n, const std::string& field, const std::string& message) const;

  YAML::Node node_;
  std::string path_;
  std::string source_;
  std::set<std::string> used_;
};

}  // namespace ncmd::detail
