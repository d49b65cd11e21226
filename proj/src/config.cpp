#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

#include "config_reader.hpp"

namespace ncmd {

namespace {

std::string format_error(const std::string& source, int line, const std::string& field, const std::string& message) {
  std::ostringstream os;
  os << source;
  if (line > 0) os << ":" << line;
  os << ": ";
  if (!field.empty()) os << "field '" << field << "': ";
  os << message;
  return os.str();
}

std::string bound(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

ConfigError::ConfigError(std::string source, int line, std::string field, const std::string& message)
    : std::runtime_error(format_error(source, line, field, message)),
      source_(std::move(source)),
      line_(line),
      field_(std::move(field)) {}

namespace detail {

Constraint any_number() {
  return {[](double) { return true; }, ""};
}
Constraint open_interval(double lo, double hi) {
  return {[lo, hi](double v) { return v > lo && v < hi; }, "must lie in (" + bound(lo) + "," + bound(hi) + ")"};
}
Constraint closed_interval(double lo, double hi) {
  return {[lo, hi](double v) { return v >= lo && v <= hi; }, "must lie in [" + bound(lo) + "," + bound(hi) + "]"};
}
Constraint half_open(double lo, double hi) {
  return {[lo, hi](double v) { return v > lo && v <= hi; }, "must lie in (" + bound(lo) + "," + bound(hi) + "]"};
}
Constraint positive() {
  return {[](double v) { return v > 0.0; }, "must be positive"};
}
Constraint at_least(double lo) {
  return {[lo](double v) { return v >= lo; }, "must be at least " + bound(lo)};
}

MapReader::MapReader(YAML::Node node, std::string path, std::string source)
    : node_(std::move(node)), path_(std::move(path)), source_(std::move(source)) {
  if (!node_.IsMap()) fail_node(node_, path_, "expected a mapping");
}

bool MapReader::has(const std::string& key) const { return static_cast<bool>(node_[key]); }

int MapReader::line_of(const std::string& key) const {
  const YAML::Node n = node_[key];
  if (n) return n.Mark().line + 1;
  return node_.Mark().line + 1;
}

std::size_t MapReader::length(const std::string& key) const {
  const YAML::Node n = node_[key];
  if (!n || n.IsNull()) return 0;
  return n.IsSequence() ? n.size() : 1;
}

void MapReader::fail(const std::string& key, const std::string& message) const {
  throw ConfigError(source_, line_of(key), field(key), message);
}

void MapReader::fail_here(const std::string& message) const {
  throw ConfigError(source_, node_.Mark().line + 1, path_, message);
}

void MapReader::fail_node(const YAML::Node& n, const std::string& f, const std::string& message) const {
  const int line = n.Mark().line >= 0 ? n.Mark().line + 1 : 0;
  throw ConfigError(source_, line, f, message);
}

YAML::Node MapReader::get(const std::string& key) {
  used_.insert(key);
  YAML::Node n = node_[key];
  if (!n || n.IsNull()) fail(key, "is required");
  return n;
}

double MapReader::scalar_number(const YAML::Node& n, const std::string& f) const {
  if (!n.IsScalar()) fail_node(n, f, "expected a number");
  double v = 0.0;
  try {
    v = n.as<double>();
  } catch (const YAML::Exception&) {
    fail_node(n, f, "expected a number, got '" + n.Scalar() + "'");
  }
  if (!std::isfinite(v)) fail_node(n, f, "must be finite");
  return v;
}

double MapReader::number(const std::string& key, const Constraint& c) {
  const YAML::Node n = get(key);
  const double v = scalar_number(n, field(key));
  if (!c.ok(v)) fail(key, c.text + " (got " + n.Scalar() + ")");
  return v;
}

double MapReader::number(const std::string& key, double fallback, const Constraint& c) {
  if (!has(key)) {
    used_.insert(key);
    return fallback;
  }
  return number(key, c);
}

std::uint64_t MapReader::count(const std::string& key, std::uint64_t min) {
  const YAML::Node n = get(key);
  const double v = scalar_number(n, field(key));
  if (v != std::floor(v) || v < 0.0 || v > 9007199254740992.0) fail(key, "must be a non-negative integer");
  const auto c = static_cast<std::uint64_t>(v);
  if (c < min) fail(key, "must be at least " + std::to_string(min));
  return c;
}

std::uint64_t MapReader::count(const std::string& key, std::uint64_t fallback, std::uint64_t min) {
  if (!has(key)) {
    used_.insert(key);
    return fallback;
  }
  return count(key, min);
}

std::string MapReader::text(const std::string& key) {
  const YAML::Node n = get(key);
  if (!n.IsScalar()) fail(key, "expected a string");
  return n.Scalar();
}

std::string MapReader::text(const std::string& key, const std::string& fallback) {
  if (!has(key)) {
    used_.insert(key);
    return fallback;
  }
  return text(key);
}

std::string MapReader::choice(const std::string& key, const std::vector<std::string>& options) {
  const std::string v = text(key);
  for (const auto& o : options)
    if (o == v) return v;
  std::string list;
  for (const auto& o : options) list += (list.empty() ? "" : ", ") + o;
  fail(key, "must be one of {" + list + "} (got '" + v + "')");
}

std::string MapReader::choice(const std::string& key, const std::vector<std::string>& options,
                              const std::string& fallback) {
  if (!has(key)) {
    used_.insert(key);
    return fallback;
  }
  return choice(key, options);
}

bool MapReader::flag(const std::string& key, bool fallback) {
  if (!has(key)) {
    used_.insert(key);
    return fallback;
  }
  const YAML::Node n = get(key);
  try {
    return n.as<bool>();
  } catch (const YAML::Exception&) {
    fail(key, "expected true or false");
  }
}

Vector MapReader::node_vector(const YAML::Node& n, const std::string& f, std::size_t dim) const {
  Vector v;
  if (n.IsScalar()) {
    v = Vector::Constant(1, scalar_number(n, f));
  } else if (n.IsSequence()) {
    if (n.size() == 0) fail_node(n, f, "expected a non-empty list of numbers");
    v.resize(static_cast<Eigen::Index>(n.size()));
    for (std::size_t i = 0; i < n.size(); ++i) v(static_cast<Eigen::Index>(i)) = scalar_number(n[i], f);
  } else {
    fail_node(n, f, "expected a number or a list of numbers");
  }
  if (dim != 0 && static_cast<std::size_t>(v.size()) != dim)
    fail_node(n, f, "expected " + std::to_string(dim) + " entries, got " + std::to_string(v.size()));
  return v;
}

Vector MapReader::vector(const std::string& key, std::size_t dim) { return node_vector(get(key), field(key), dim); }

Matrix MapReader::matrix(const std::string& key, std::size_t dim) {
  const YAML::Node n = get(key);
  if (dim == 1 && n.IsScalar()) return Matrix::Constant(1, 1, scalar_number(n, field(key)));
  if (!n.IsSequence() || n.size() != dim) fail(key, "expected a " + std::to_string(dim) + "x" + std::to_string(dim) + " matrix");
  Matrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) m.row(static_cast<Eigen::Index>(i)) = node_vector(n[i], field(key), dim).transpose();
  return m;
}

std::vector<double> MapReader::numbers(const std::string& key, const Constraint& c) {
  const YAML::Node n = get(key);
  std::vector<double> out;
  if (n.IsScalar()) {
    out.push_back(scalar_number(n, field(key)));
  } else if (n.IsSequence() && n.size() > 0) {
    for (const auto& e : n) out.push_back(scalar_number(e, field(key)));
  } else {
    fail(key, "expected a number or a non-empty list of numbers");
  }
  for (double v : out)
    if (!c.ok(v)) fail(key, "every entry " + c.text);
  return out;
}

std::vector<double> MapReader::numbers(const std::string& key, std::vector<double> fallback, const Constraint& c) {
  if (!has(key)) {
    used_.insert(key);
    return fallback;
  }
  return numbers(key, c);
}

std::vector<Vector> MapReader::grid(const std::string& key, std::size_t dim) {
  const YAML::Node n = get(key);
  const std::string f = field(key);
  std::vector<Vector> out;
  if (n.IsSequence()) {
    if (n.size() == 0) fail(key, "grid must not be empty");
    for (const auto& e : n) out.push_back(node_vector(e, f, dim));
    return out;
  }
  if (!n.IsMap()) fail(key, "expected a list of points or {lo, hi, points}");
  MapReader spec(n, f, source_);
  const double lo = spec.number("lo");
  const double hi = spec.number("hi");
  const auto points = spec.count("points", 1);
  if (hi < lo) spec.fail("hi", "must not be below lo");
  Vector direction = Vector::Ones(1);
  if (spec.has("direction"))
    direction = spec.vector("direction", dim);
  else if (dim != 1)
    spec.fail_here("a range grid in dimension " + std::to_string(dim) + " needs a direction");
  Vector offset = Vector::Zero(direction.size());
  if (spec.has("offset")) offset = spec.vector("offset", static_cast<std::size_t>(direction.size()));
  spec.finish();
  for (std::uint64_t i = 0; i < points; ++i) {
    const double s = points == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    out.push_back(offset + s * direction);
  }
  return out;
}

std::vector<Vector> MapReader::grid(const std::string& key, std::size_t dim, const std::vector<Vector>& fallback) {
  if (!has(key)) {
    used_.insert(key);
    return fallback;
  }
  return grid(key, dim);
}

MapReader MapReader::map(const std::string& key) {
  const YAML::Node n = get(key);
  if (!n.IsMap()) fail(key, "expected a mapping");
  return MapReader(n, field(key), source_);
}

std::vector<MapReader> MapReader::maps(const std::string& key) {
  const YAML::Node n = get(key);
  if (!n.IsSequence() || n.size() == 0) fail(key, "expected a non-empty list of mappings");
  std::vector<MapReader> out;
  for (std::size_t i = 0; i < n.size(); ++i) out.emplace_back(n[i], field(key) + "[" + std::to_string(i) + "]", source_);
  return out;
}

void MapReader::finish() const {
  for (const auto& kv : node_) {
    const std::string k = kv.first.as<std::string>();
    if (!used_.count(k)) throw ConfigError(source_, kv.first.Mark().line + 1, field(k), "unknown field");
  }
}

}  // namespace detail

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  auto doc = std::make_shared<detail::ConfigDocument>();
  doc->source = source;
  try {
    doc->root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source, e.mark.line + 1, "", "YAML syntax error: " + e.msg);
  }
  if (!doc->root.IsMap()) throw ConfigError(source, 1, "", "the document must be a mapping");

  detail::MapReader top(doc->root, "", source);
  ExperimentConfig cfg;
  cfg.source = source;
  cfg.id = top.text("id");
  static const std::regex id_pattern("[A-Za-z0-9_.-]+");
  if (!std::regex_match(cfg.id, id_pattern)) top.fail("id", "may only contain letters, digits, '_', '-' and '.'");
  cfg.family = top.text("family");
  if (!top.has("seed")) top.fail("seed", "is required (there is no default seed)");
  const std::string seed = top.text("seed");
  if (seed.empty() || seed.find_first_not_of("0123456789") != std::string::npos)
    top.fail("seed", "must be an unsigned 64-bit integer");
  try {
    cfg.seed = std::stoull(seed);
  } catch (const std::exception&) {
    top.fail("seed", "must be an unsigned 64-bit integer");
  }
  if (top.has("output")) cfg.output = top.text("output");
  cfg.document = doc;
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError(path.string(), 0, "", "cannot open file");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), path.string());
}

}  // namespace ncmd
