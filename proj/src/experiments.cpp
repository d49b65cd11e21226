#include "ncmd/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "config_reader.hpp"
#include "ncmd/convergence_lab.hpp"
#include "ncmd/mittag_leffler.hpp"
#include "ncmd/quadrature.hpp"
#include "ncmd/random_time.hpp"
#include "ncmd/rate_functions.hpp"

namespace ncmd {

namespace {

using detail::MapReader;
using Job = std::function<void(RunReport&)>;
using ClosedForm = std::function<std::optional<double>(const Vector&)>;

constexpr double kZeroTolerance = 1e-8;

std::string num(double v) { return format_number(v); }

std::string vec(const Vector& v) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v(i));
  return s + ")";
}

std::vector<std::string> coords(const std::string& prefix, std::size_t d) {
  if (d == 1) return {prefix};
  std::vector<std::string> out;
  for (std::size_t i = 1; i <= d; ++i) out.push_back(prefix + "_" + std::to_string(i));
  return out;
}

std::vector<std::string> columns(std::initializer_list<std::vector<std::string>> parts) {
  std::vector<std::string> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

void append(std::vector<Cell>& row, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) row.emplace_back(v(i));
}

Cell optional_cell(const std::optional<double>& v) {
  if (v) return *v;
  return std::string("-");
}

// Runs `f`, turning argument errors from model constructors into config
// errors located at the enclosing map.
template <class F>
auto guarded(const MapReader& m, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    m.fail_here(e.what());
  }
}

// ---------------------------------------------------------------------------
// Model readers

MixtureLaw read_law(MapReader m) {
  const std::string kind = m.choice("kind", {"point", "gaussian", "rademacher", "mixture"});
  std::optional<MixtureLaw> law;
  if (kind == "point") {
    const Vector at = m.vector("at");
    law = MixtureLaw::point_mass(at);
  } else if (kind == "gaussian") {
    const Vector mean = m.vector("mean");
    const Matrix cov = m.matrix("covariance", static_cast<std::size_t>(mean.size()));
    law = guarded(m, [&] { return MixtureLaw::gaussian(mean, cov); });
  } else if (kind == "rademacher") {
    const auto dim = m.count("dim", 1);
    if (dim > 6) m.fail("dim", "must be at most 6");
    law = MixtureLaw::rademacher(dim);
  } else {
    std::vector<MixtureComponent> comps;
    std::size_t dim = 0;
    for (auto c : m.maps("components")) {
      MixtureComponent mc;
      mc.weight = c.number("weight", detail::half_open(0.0, 1.0));
      mc.mean = c.vector("mean", dim);
      dim = static_cast<std::size_t>(mc.mean.size());
      mc.cov = c.has("covariance") ? c.matrix("covariance", dim) : Matrix::Zero(mc.mean.size(), mc.mean.size());
      c.finish();
      comps.push_back(std::move(mc));
    }
    law = guarded(m, [&] { return MixtureLaw(comps); });
  }
  m.finish();
  return *law;
}

LevyModel read_driver(MapReader m) {
  const std::string kind = m.choice("kind", {"brownian", "drift", "compound_poisson"});
  std::optional<LevyModel> model;
  if (kind == "brownian") {
    std::size_t dim = m.length("drift");
    if (dim == 0) dim = m.length("covariance");
    if (dim == 0) m.fail("covariance", "is required");
    const Vector drift = m.has("drift") ? m.vector("drift", dim) : Vector::Zero(static_cast<Eigen::Index>(dim));
    const Matrix cov = m.matrix("covariance", dim);
    model = guarded(m, [&] { return LevyModel::brownian(drift, cov); });
  } else if (kind == "drift") {
    model = LevyModel::drift(m.vector("velocity"));
  } else {
    const double rate = m.number("rate", detail::positive());
    MixtureLaw jumps = read_law(m.map("jumps"));
    model = LevyModel::compound_poisson(rate, std::move(jumps));
  }
  m.finish();
  return *model;
}

SubordinatorModel read_clock(MapReader m) {
  const std::string kind = m.choice("kind", {"gamma", "poisson"});
  std::optional<SubordinatorModel> clock;
  if (kind == "gamma") {
    const double shape = m.number("shape", detail::positive());
    const double rate = m.number("rate", detail::positive());
    clock = SubordinatorModel::gamma(shape, rate);
  } else {
    clock = SubordinatorModel::poisson(m.number("rate", detail::positive()));
  }
  m.finish();
  return *clock;
}

double read_nu(MapReader& m) { return m.number("nu", detail::open_interval(0.0, 1.0)); }

ScalingRegime read_power(MapReader& m) {
  return ScalingRegime::power(m.number("beta", detail::open_interval(0.0, 1.0)));
}

std::vector<double> read_horizons(MapReader& m, const std::string& key = "horizons") {
  auto h = m.numbers(key, detail::at_least(1.0));
  for (std::size_t i = 1; i < h.size(); ++i)
    if (!(h[i] > h[i - 1])) m.fail(key, "must be strictly increasing");
  return h;
}

std::vector<std::uint64_t> read_counts(MapReader& m, const std::string& key) {
  auto h = read_horizons(m, key);
  std::vector<std::uint64_t> out;
  for (double v : h) {
    if (v != std::floor(v) || v > 9007199254740992.0) m.fail(key, "entries must be integers");
    out.push_back(static_cast<std::uint64_t>(v));
  }
  return out;
}

std::size_t read_samples(MapReader& m) {
  const auto n = m.count("samples", 10000);
  if (n > 100000000) m.fail("samples", "must be at most 1e8");
  return static_cast<std::size_t>(n);
}

void require_pd(MapReader& m, const std::string& key, const Matrix& h) {
  Eigen::LLT<Matrix> llt(h);
  if (llt.info() != Eigen::Success || !h.isApprox(h.transpose(), 1e-12)) m.fail(key, "must be symmetric positive definite");
}

struct MapSpec {
  enum class Kind { Identity, Logistic, Skew } kind = Kind::Identity;
  Vector delta;

  std::size_t out_dim(std::size_t h) const {
    switch (kind) {
      case Kind::Identity: return h;
      case Kind::Logistic: return h + 1;
      case Kind::Skew: return h - 1;
    }
    return h;
  }
  Vector operator()(const Vector& x) const {
    switch (kind) {
      case Kind::Identity: return x;
      case Kind::Logistic: return logistic_map(x);
      case Kind::Skew: return skew_map(x, delta);
    }
    return x;
  }
  std::string name() const {
    switch (kind) {
      case Kind::Identity: return "identity";
      case Kind::Logistic: return "logistic";
      case Kind::Skew: return "skew";
    }
    return "?";
  }
};

MapSpec read_map(MapReader m, std::size_t h) {
  MapSpec s;
  const std::string kind = m.choice("kind", {"identity", "logistic", "skew"});
  if (kind == "logistic") {
    s.kind = MapSpec::Kind::Logistic;
  } else if (kind == "skew") {
    s.kind = MapSpec::Kind::Skew;
    if (h < 2) m.fail_here("the skew map needs a law of dimension at least 2");
    s.delta = m.vector("delta", h - 1);
    if ((s.delta.array().abs() >= 1.0).any()) m.fail("delta", "entries must lie in (-1,1)");
  }
  m.finish();
  return s;
}

// Block form diag(Psi, 1) required by the skew closed forms.
std::optional<SkewParams> skew_params_of(const Matrix& cov, const Vector& delta) {
  const auto k = delta.size();
  if (cov.rows() != k + 1) return std::nullopt;
  if (std::fabs(cov(k, k) - 1.0) > 1e-12) return std::nullopt;
  if (!cov.row(k).head(k).isZero(1e-14) || !cov.col(k).head(k).isZero(1e-14)) return std::nullopt;
  SkewParams p{cov.topLeftCorner(k, k), delta};
  try {
    p.validate();
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
  return p;
}

// ---------------------------------------------------------------------------
// Report sections

void scgf_section(RunReport& r, const ScgfLimitCheck& check) {
  const ScgfReport rep = run_scgf_check(check);
  const std::size_t d = static_cast<std::size_t>(check.grid.front().size());
  auto& t = r.table("scgf", columns({{"horizon"}, coords("theta", d), {"prelimit", "limit", "error"}}));
  for (const auto& row : rep.rows) {
    std::vector<Cell> cells{row.horizon};
    append(cells, row.theta);
    cells.insert(cells.end(), {row.prelimit, row.limit, row.error});
    t.add_row(std::move(cells));
  }
  auto& s = r.table("scgf_summary", {"horizon", "max_error", "tolerance"});
  for (std::size_t i = 0; i < rep.horizons.size(); ++i) s.add_row({rep.horizons[i], rep.max_errors[i], rep.tolerance});
  std::string detail = "final max error " + num(rep.max_errors.back()) + " vs tolerance " + num(rep.tolerance) +
                       (rep.decreasing ? ", non-increasing over the last 3 horizons" : ", NOT non-increasing over the last 3 horizons");
  if (!rep.calibration.empty()) detail += "; calibration: " + rep.calibration;
  r.verdict("scgf-limit", rep.pass, detail, "scgf_summary");
}

void weak_section(RunReport& r, const WeakConvergenceCheck& check, std::uint64_t seed) {
  const WeakReport rep = run_weak_convergence(check, seed);
  const std::size_t d = static_cast<std::size_t>(check.grid.front().size());
  auto& t = r.table("mgf", columns({coords("theta", d), {"empirical", "se", "target", "z"}}));
  for (const auto& row : rep.rows) {
    std::vector<Cell> cells;
    append(cells, row.theta);
    cells.insert(cells.end(), {row.empirical, row.se, row.target, row.z});
    t.add_row(std::move(cells));
  }
  r.verdict("weak-limit", rep.pass,
            "max |z| = " + num(rep.max_abs_z) + " vs " + num(rep.se_multiplier) + " over " +
                std::to_string(rep.batch_size) + " draws",
            "mgf");
}

void rate_section(RunReport& r, const LimitCumulant& lc, const std::vector<Vector>& grid, const ClosedForm& closed,
                  double tol) {
  const std::size_t d = lc.dim();
  auto& t = r.table("rate", columns({coords("x", d), {"numeric", "closed_form", "abs_diff"}}));
  bool any_closed = false, agree = true;
  double worst = 0.0;
  for (const auto& x : grid) {
    const double numeric = lc.rate(x).value;
    const std::optional<double> c = closed ? closed(x) : std::nullopt;
    std::optional<double> diff;
    if (c) {
      any_closed = true;
      if (*c == kInf && numeric == kInf) {
        diff = 0.0;
      } else if (*c == kInf || numeric == kInf) {
        diff = kInf;
        agree = false;
      } else {
        diff = std::fabs(*c - numeric);
        worst = std::max(worst, *diff);
        if (*diff > tol) agree = false;
      }
    }
    std::vector<Cell> cells;
    append(cells, x);
    cells.insert(cells.end(), {numeric, optional_cell(c), optional_cell(diff)});
    t.add_row(std::move(cells));
  }
  if (any_closed)
    r.verdict("rate-oracle", agree,
              lc.name() + " numerical conjugate vs closed form: max finite abs diff " + num(worst) + " (tolerance " +
                  num(tol) + "), infinite values " + (agree ? "agree" : "checked"),
              "rate");

  auto& z = r.table("rate_zero", columns({coords("x", d), {"numeric"}}));
  const double at_zero = lc.rate(lc.zero_point()).value;
  std::vector<Cell> cells;
  append(cells, lc.zero_point());
  cells.emplace_back(at_zero);
  z.add_row(std::move(cells));
  r.verdict("rate-zero", at_zero <= kZeroTolerance,
            "rate at " + vec(lc.zero_point()) + " is " + num(at_zero) + " (<= " + num(kZeroTolerance) + ")", "rate_zero");
}

void tail_section(RunReport& r, const std::string& table, const TailReport& rep, const std::string& check) {
  auto& t = r.table(table, {"horizon", "log_probability", "decay", "target", "error", "std_error"});
  for (const auto& row : rep.rows)
    t.add_row({row.horizon, row.log_probability, row.decay, rep.target, row.error, row.std_error});
  std::string detail = "final decay " + num(rep.rows.back().decay) + " vs target " + num(rep.target) +
                       " (tolerance " + num(rep.tolerance) + ")";
  if (!rep.note.empty()) detail += "; " + rep.note;
  r.verdict(check, rep.pass, detail, table);
}

struct TailSpec {
  double level = 0.0;
  std::vector<double> horizons;
  double tolerance = 0.01;
};

std::optional<TailSpec> read_tail(MapReader& m, const std::string& key) {
  if (!m.has(key)) return std::nullopt;
  MapReader t = m.map(key);
  TailSpec s;
  s.level = t.number("level");
  s.horizons = read_horizons(t);
  s.tolerance = t.number("tolerance", 0.01, detail::positive());
  t.finish();
  return s;
}

WeakConvergenceCheck weak_common(MapReader& m, std::size_t dim) {
  WeakConvergenceCheck c;
  c.grid = m.grid("theta_grid", dim);
  c.batch_size = read_samples(m);
  c.se_multiplier = m.number("se_multiplier", 4.0, detail::positive());
  return c;
}

ScgfLimitCheck& scgf_common(MapReader& m, ScgfLimitCheck& c, std::size_t dim) {
  c.grid = m.grid("theta_grid", dim);
  c.horizons = read_horizons(m);
  c.tolerance = m.number("tolerance", 1e-3, detail::positive());
  c.calibration = m.text("calibration", "");
  return c;
}

// ---------------------------------------------------------------------------
// Families: inverse stable time change

ClosedForm imm_closed_1d(const LevyModel& driver, double nu) {
  if (driver.dim() != 1) return {};
  const double m = driver.mean()(0), q = driver.covariance()(0, 0);
  if (m != 0.0 && q == 0.0) return [m, nu](const Vector& x) -> std::optional<double> { return h_nu(x(0), m, nu); };
  if (m == 0.0 && q > 0.0)
    return [q, nu](const Vector& x) -> std::optional<double> { return imm_md_centered_1d(x(0), q, nu); };
  return {};
}

Job prep_imm_ld(MapReader& m, std::uint64_t) {
  const double nu = read_nu(m);
  const LevyModel driver = read_driver(m.map("driver"));
  ScgfLimitCheck check = scgf_imm_ld(nu, driver.cumulant());
  scgf_common(m, check, driver.dim());
  const auto xs = m.grid("x_grid", driver.dim(), {});
  const double rate_tol = m.number("rate_tolerance", 1e-4, detail::positive());
  return [=](RunReport& r) {
    scgf_section(r, check);
    if (xs.empty()) return;
    rate_section(r, LimitCumulant::imm_ld(nu, driver.cumulant()), xs, imm_closed_1d(driver, nu), rate_tol);
  };
}

Job prep_imm_weak(MapReader& m, std::uint64_t seed) {
  const double nu = read_nu(m);
  const LevyModel driver = read_driver(m.map("driver"));
  if (driver.driftless() && driver.covariance().isZero(0.0))
    m.fail("driver", "has zero mean and zero covariance; the limit is degenerate");
  const double t = m.number("time", detail::positive());
  WeakConvergenceCheck check = weak_common(m, driver.dim());
  check.name = "imm-weak";
  const InverseStableModel clock(nu);
  check.sampler = [driver, clock, t](std::size_t n, std::uint64_t s) {
    return sample_time_changed(driver, clock, t, ScalingRegime::unit(), n, s);
  };
  if (driver.driftless()) {
    const Matrix q = driver.covariance();
    check.target = [nu, q](const Vector& th) { return ml_eval(nu, 0.5 * th.dot(q * th)); };
  } else {
    const Vector mean = driver.mean();
    check.target = [nu, mean](const Vector& th) { return ml_eval(nu, th.dot(mean)); };
  }
  return [=](RunReport& r) { weak_section(r, check, check_seed(seed, "weak-limit")); };
}

Job prep_imm_md(MapReader& m, std::uint64_t) {
  const double nu = read_nu(m);
  const LevyModel driver = read_driver(m.map("driver"));
  if (driver.driftless() && driver.covariance().isZero(0.0))
    m.fail("driver", "has zero mean and zero covariance; no rate function is defined");
  const ScalingRegime scaling = read_power(m);
  ScgfLimitCheck check = scgf_imm_md(nu, driver.cumulant(), scaling);
  scgf_common(m, check, driver.dim());
  const auto xs = m.grid("x_grid", driver.dim(), {});
  const double rate_tol = m.number("rate_tolerance", 1e-4, detail::positive());
  return [=](RunReport& r) {
    scgf_section(r, check);
    if (xs.empty()) return;
    const LimitCumulant lc = LimitCumulant::imm_md(nu, driver.cumulant());
    ClosedForm closed;
    if (!driver.driftless()) {
      const Vector mean = driver.mean();
      closed = [mean, nu](const Vector& x) -> std::optional<double> {
        const ExplicitCase ec = imm_md_explicit_cases(x, mean, nu);
        if (ec.tag == ExplicitCase::Tag::None) return std::nullopt;
        return ec.value;
      };
    } else if (driver.dim() == 1) {
      const double q = driver.covariance()(0, 0);
      closed = [q, nu](const Vector& x) -> std::optional<double> { return imm_md_centered_1d(x(0), q, nu); };
    }
    rate_section(r, lc, xs, closed, rate_tol);
  };
}

Job prep_imm_explicit_cases(MapReader& m, std::uint64_t) {
  const auto nus = m.numbers("nu", detail::open_interval(0.0, 1.0));
  const Vector mean = m.vector("m");
  if (mean.isZero(0.0)) m.fail("m", "must be a nonzero vector");
  const auto points = m.grid("points", static_cast<std::size_t>(mean.size()));
  const double tol = m.number("tolerance", 1e-4, detail::positive());
  return [=](RunReport& r) {
    const std::size_t d = static_cast<std::size_t>(mean.size());
    auto& t = r.table("cases", columns({{"nu"}, coords("x", d), {"tag", "c", "closed_form", "numeric", "abs_diff"}}));
    std::size_t rays = 0, divergent = 0;
    bool rays_ok = true, divergent_ok = true;
    double worst = 0.0;
    for (double nu : nus) {
      const LimitCumulant lc = LimitCumulant::imm_md_drift(nu, mean);
      for (const auto& x : points) {
        const ExplicitCase ec = imm_md_explicit_cases(x, mean, nu);
        const double numeric = ec.tag == ExplicitCase::Tag::None ? ec.value : lc.rate(x).value;
        std::optional<double> closed, diff;
        if (ec.tag == ExplicitCase::Tag::Ray) {
          ++rays;
          closed = ec.value;
          diff = numeric == kInf ? kInf : std::fabs(numeric - ec.value);
          worst = std::max(worst, *diff);
          if (!(*diff <= tol)) rays_ok = false;
        } else if (ec.tag != ExplicitCase::Tag::None) {
          ++divergent;
          closed = kInf;
          if (numeric != kInf) divergent_ok = false;
        }
        std::vector<Cell> cells{nu};
        append(cells, x);
        cells.insert(cells.end(), {tag_name(ec.tag), ec.tag == ExplicitCase::Tag::Ray ? Cell(ec.c) : Cell(std::string("-")),
                                   optional_cell(closed), numeric, optional_cell(diff)});
        t.add_row(std::move(cells));
      }
    }
    if (rays > 0)
      r.verdict("ray-values", rays_ok,
                std::to_string(rays) + " points on the ray, max abs diff " + num(worst) + " (tolerance " + num(tol) + ")",
                "cases");
    if (divergent > 0)
      r.verdict("divergent-cases", divergent_ok,
                std::to_string(divergent) + " opposite-sign or zero-mean points, numerical conjugate " +
                    (divergent_ok ? "diverges at each" : "stays finite somewhere"),
                "cases");
    if (rays == 0 && divergent == 0) r.verdict("explicit-cases", false, "no grid point falls in an explicit case", "cases");
  };
}

// ---------------------------------------------------------------------------
// Families: subordinator time change

ClosedForm levy_md_closed(const LevyModel& driver, double kv) {
  if (driver.kind() == LevyModel::Kind::BrownianWithDrift) {
    const Matrix cov = kv * driver.covariance();
    if (Eigen::LLT<Matrix>(cov).info() != Eigen::Success) return {};
    const Vector center = kv * driver.mean();
    return [cov, center](const Vector& x) -> std::optional<double> { return gaussian_quadratic_rate(x - center, cov); };
  }
  if (driver.kind() == LevyModel::Kind::CompoundPoisson && driver.jumps()->is_single_unit_atom()) {
    const double lambda = kv * driver.jump_rate();
    return [lambda](const Vector& x) -> std::optional<double> { return poisson_rate(x(0), lambda); };
  }
  return {};
}

Job prep_levy_ld(MapReader& m, std::uint64_t) {
  const SubordinatorModel clock = read_clock(m.map("clock"));
  const LevyModel driver = read_driver(m.map("driver"));
  const auto xs = m.grid("x_grid", driver.dim());
  const double tol = m.number("tolerance", 1e-4, detail::positive());
  return [=](RunReport& r) {
    ClosedForm closed;
    if (driver.kind() == LevyModel::Kind::DeterministicDrift && driver.dim() == 1) {
      const double v = driver.drift_vector()(0);
      closed = [v, clock](const Vector& x) -> std::optional<double> { return subordinated_drift_rate(x(0), v, clock); };
    }
    rate_section(r, LimitCumulant::levy_ld(clock, driver.cumulant()), xs, closed, tol);
  };
}

Job prep_levy_weak(MapReader& m, std::uint64_t seed) {
  const SubordinatorModel clock = read_clock(m.map("clock"));
  const LevyModel driver = read_driver(m.map("driver"));
  const double t = m.number("time", detail::positive());
  WeakConvergenceCheck check = weak_common(m, driver.dim());
  check.name = "levy-weak";
  check.sampler = [driver, clock, t](std::size_t n, std::uint64_t s) {
    return sample_time_changed(driver, clock, t, ScalingRegime::unit(), n, s);
  };
  const double kv = clock.mean_rate();
  const auto ks = driver.cumulant().eval;
  check.target = [kv, ks](const Vector& th) { return std::exp(kv * ks(th)); };
  return [=](RunReport& r) { weak_section(r, check, check_seed(seed, "weak-limit")); };
}

Job prep_levy_md(MapReader& m, std::uint64_t) {
  const SubordinatorModel clock = read_clock(m.map("clock"));
  const LevyModel driver = read_driver(m.map("driver"));
  const ScalingRegime scaling = read_power(m);
  ScgfLimitCheck check = scgf_levy_md(clock, driver.cumulant(), scaling);
  scgf_common(m, check, driver.dim());
  const auto xs = m.grid("x_grid", driver.dim(), {});
  const double rate_tol = m.number("rate_tolerance", 1e-4, detail::positive());
  return [=](RunReport& r) {
    scgf_section(r, check);
    if (xs.empty()) return;
    rate_section(r, LimitCumulant::levy_md(clock.mean_rate(), driver.cumulant()), xs,
                 levy_md_closed(driver, clock.mean_rate()), rate_tol);
  };
}

Job prep_levy_inequality(MapReader& m, std::uint64_t) {
  struct Pair {
    SubordinatorModel clock;
    LevyModel driver;
    std::vector<Vector> xs;
  };
  std::vector<Pair> pairs;
  for (auto p : m.maps("pairs")) {
    SubordinatorModel clock = read_clock(p.map("clock"));
    LevyModel driver = read_driver(p.map("driver"));
    auto xs = p.grid("x_grid", driver.dim());
    p.finish();
    pairs.push_back({clock, driver, std::move(xs)});
  }
  const double slack = m.number("slack", 1e-8, detail::positive());
  return [=](RunReport& r) {
    bool dominates = true, zero_ok = true;
    double worst = 0.0;
    std::string zeros;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto& pr = pairs[k];
      const LimitCumulant ld = LimitCumulant::levy_ld(pr.clock, pr.driver.cumulant());
      const LimitCumulant md = LimitCumulant::levy_md(pr.clock.mean_rate(), pr.driver.cumulant());
      const std::string name = "pair_" + std::to_string(k + 1);
      const std::size_t d = pr.driver.dim();
      auto& t = r.table(name, columns({coords("x", d), {"I_LD", "I_MD", "diff"}}));
      const Vector x0 = ld.zero_point();
      for (const auto& x : pr.xs) {
        const double a = ld.rate(x).value, b = md.rate(x).value;
        const double diff = (b == kInf) ? kInf : b - a;
        if (!(diff >= -slack)) dominates = false;
        if (diff < 0.0) worst = std::min(worst, diff);
        if ((x - x0).norm() > 1e-3 && !(a > 1e-10 && b > 1e-10)) zero_ok = false;
        std::vector<Cell> cells;
        append(cells, x);
        cells.insert(cells.end(), {a, b, diff});
        t.add_row(std::move(cells));
      }
      const double a0 = ld.rate(x0).value, b0 = md.rate(x0).value;
      const double dist = (x0 - md.zero_point()).norm();
      if (!(a0 <= kZeroTolerance && b0 <= kZeroTolerance && dist <= kZeroTolerance)) zero_ok = false;
      auto& z = r.table(name + "_zero", columns({coords("x", d), {"I_LD", "I_MD"}}));
      std::vector<Cell> cells;
      append(cells, x0);
      cells.insert(cells.end(), {a0, b0});
      z.add_row(std::move(cells));
      zeros += (zeros.empty() ? "" : ", ") + vec(x0);
    }
    r.verdict("md-dominates-ld", dominates,
              "I_MD - I_LD >= -" + num(slack) + " on every grid point; most negative difference " + num(worst), "pair_1");
    r.verdict("common-zero", zero_ok,
              "both rates vanish at kappa_V'(0) grad kappa_S(0) = " + zeros + " and are positive elsewhere on the grid",
              "pair_1_zero");
  };
}

// ---------------------------------------------------------------------------
// Families: triangular arrays

Job prep_poisson_ld(MapReader& m, std::uint64_t seed) {
  const double p = m.number("p", detail::half_open(0.0, 1.0));
  const MixtureLaw jumps = read_law(m.map("jumps"));
  if (jumps.has_atom_at_zero()) m.fail("jumps", "the jump law must not charge 0");
  const auto xs = m.grid("x_grid", jumps.dim());
  const double tol = m.number("tolerance", 1e-4, detail::positive());
  const auto tail = read_tail(m, "tail");
  if (tail && !jumps.is_single_unit_atom()) m.fail("tail", "exact enumeration needs jumps at the single point 1");
  std::optional<TiltedTailCheck> mc;
  if (m.has("mc_tail")) {
    MapReader t = m.map("mc_tail");
    std::vector<MixtureComponent> comps{{1.0 - p, Vector::Zero(static_cast<Eigen::Index>(jumps.dim())),
                                         Matrix::Zero(static_cast<Eigen::Index>(jumps.dim()), static_cast<Eigen::Index>(jumps.dim()))}};
    for (auto c : jumps.components()) {
      c.weight *= p;
      comps.push_back(c);
    }
    if (p == 1.0) comps.erase(comps.begin());
    TiltedTailCheck c{MixtureLaw(comps), Vector::Ones(1), 0.0, {}, std::nullopt, true, 100000, 0.05};
    c.direction = jumps.dim() == 1 ? Vector::Ones(1) : t.vector("direction", jumps.dim());
    if (jumps.dim() == 1 && t.has("direction")) c.direction = t.vector("direction", 1);
    c.level = t.number("level");
    c.horizons = read_counts(t, "horizons");
    c.samples = read_samples(t);
    c.tolerance = t.number("tolerance", 0.05, detail::positive());
    c.use_tilt = t.flag("tilt", true);
    t.finish();
    mc = c;
  }
  return [=](RunReport& r) {
    ClosedForm closed;
    if (jumps.is_single_unit_atom())
      closed = [p](const Vector& x) -> std::optional<double> { return binomial_poisson_rates(x(0), p).ld; };
    rate_section(r, LimitCumulant::poisson_ld(p, jumps), xs, closed, tol);
    if (tail) tail_section(r, "tail", run_tail_decay(binomial_ld_tail(p, tail->level, tail->horizons, tail->tolerance)), "tail-decay");
    if (mc) tail_section(r, "mc_tail", run_tail_decay(*mc, check_seed(seed, "mc-tail-decay")), "mc-tail-decay");
  };
}

Job prep_poisson_weak(MapReader& m, std::uint64_t seed) {
  const double lambda = m.number("lambda", detail::positive());
  const MixtureLaw jumps = read_law(m.map("jumps"));
  if (jumps.has_atom_at_zero()) m.fail("jumps", "the jump law must not charge 0");
  const auto n = m.count("n", 1);
  if (lambda / static_cast<double>(n) > 1.0) m.fail("n", "must be at least lambda so that p_n = lambda/n <= 1");
  WeakConvergenceCheck check = weak_common(m, jumps.dim());
  check.name = "poisson-weak";
  const TriangularSummandModel model(jumps, lambda / static_cast<double>(n));
  check.sampler = [model, n](std::size_t count, std::uint64_t s) {
    return generate_batch(count, model.dim(), s, [&](Engine& rng, Engine&) { return model.sample_sum(n, rng); },
                          "triangular array sum");
  };
  check.target = [lambda, jumps](const Vector& th) { return std::exp(lambda * std::expm1(jumps.log_mgf(th))); };
  return [=](RunReport& r) { weak_section(r, check, check_seed(seed, "weak-limit")); };
}

Job prep_poisson_md(MapReader& m, std::uint64_t) {
  const double lambda = m.number("lambda", detail::positive());
  const MixtureLaw jumps = read_law(m.map("jumps"));
  if (jumps.has_atom_at_zero()) m.fail("jumps", "the jump law must not charge 0");
  const ScalingRegime scaling = read_power(m);
  ScgfLimitCheck check = scgf_poisson_md(lambda, jumps, scaling);
  scgf_common(m, check, jumps.dim());
  const auto xs = m.grid("x_grid", jumps.dim(), {});
  const double rate_tol = m.number("rate_tolerance", 1e-4, detail::positive());
  const auto tail = read_tail(m, "tail");
  if (tail && !jumps.is_single_unit_atom()) m.fail("tail", "exact enumeration needs jumps at the single point 1");
  for (double h : check.horizons)
    if (lambda / (h * scaling.a(h)) > 1.0) m.fail("horizons", "p_n = lambda/(n a_n) exceeds 1 at n = " + num(h));
  const double beta = scaling.beta;
  return [=](RunReport& r) {
    scgf_section(r, check);
    if (!xs.empty()) {
      ClosedForm closed;
      if (jumps.is_single_unit_atom())
        closed = [lambda](const Vector& x) -> std::optional<double> { return poisson_rate(x(0), lambda); };
      rate_section(r, LimitCumulant::poisson_md(lambda, jumps), xs, closed, rate_tol);
    }
    if (tail)
      tail_section(r, "tail", run_tail_decay(binomial_md_tail(lambda, beta, tail->level, tail->horizons, tail->tolerance)),
                   "tail-decay");
  };
}

Job prep_poisson_inequality(MapReader& m, std::uint64_t) {
  const double p = m.number("p", detail::open_interval(0.0, 1.0));
  const auto xs = m.grid("x_grid", 1);
  const double tol = m.number("tolerance", 1e-4, detail::positive());
  return [=](RunReport& r) {
    auto& t = r.table("rates", {"x", "I_LD", "I_MD", "diff"});
    bool dominates = true;
    double best = kInf, best_x = 0.0;
    for (const auto& xv : xs) {
      const double x = xv(0);
      const auto rates = binomial_poisson_rates(x, p);
      const double diff = rates.ld == kInf ? kInf : rates.ld - rates.md;
      if (!(diff >= -1e-12)) dominates = false;
      if (diff < best) {
        best = diff;
        best_x = x;
      }
      t.add_row({x, rates.ld, rates.md, diff});
    }
    r.verdict("ld-dominates-md", dominates, "I_LD - I_MD >= 0 at every grid point (lambda = p = " + num(p) + ")", "rates");
    r.verdict("minimum-at-p", best <= 1e-9 && std::fabs(best_x - p) <= 1e-9,
              "min of I_LD - I_MD is " + num(best) + " at x = " + num(best_x), "rates");

    const auto unit = MixtureLaw::point_mass(Vector::Ones(1));
    const LimitCumulant ld = LimitCumulant::poisson_ld(p, unit), md = LimitCumulant::poisson_md(p, unit);
    auto& o = r.table("oracle", {"x", "I_LD", "I_LD_numeric", "I_MD", "I_MD_numeric"});
    bool agree = true;
    double worst = 0.0;
    auto check = [&](double closed, double numeric) {
      if (closed == kInf || numeric == kInf) {
        if (closed != numeric) agree = false;
        return;
      }
      worst = std::max(worst, std::fabs(closed - numeric));
      if (std::fabs(closed - numeric) > tol) agree = false;
    };
    for (const auto& xv : xs) {
      const auto rates = binomial_poisson_rates(xv(0), p);
      const double a = ld.rate(xv).value, b = md.rate(xv).value;
      check(rates.ld, a);
      check(rates.md, b);
      o.add_row({xv(0), rates.ld, a, rates.md, b});
    }
    r.verdict("rate-oracle", agree, "closed forms vs numerical conjugates: max abs diff " + num(worst), "oracle");
  };
}

// ---------------------------------------------------------------------------
// Families: continuous mappings

ScalarField numeric_conjugate(const MixtureLaw& law) {
  return [law](const Vector& x) {
    ConjugateProblem p;
    p.lambda = [&law](const Vector& th) { return law.log_mgf(th); };
    p.x = x;
    p.restarts = 0;
    return conjugate(p).value;
  };
}

std::optional<std::pair<Vector, Matrix>> gaussian_of(const MixtureLaw& law) {
  const auto& c = law.components();
  if (c.size() != 1) return std::nullopt;
  if (Eigen::LLT<Matrix>(c[0].cov).info() != Eigen::Success) return std::nullopt;
  return std::make_pair(c[0].mean, c[0].cov);
}

ContractionProblem contraction(const ScalarField& inner, const MapSpec& map, const Vector& y, std::size_t h,
                               double box) {
  ContractionProblem p;
  p.inner_rate = inner;
  p.y = y;
  p.h = h;
  p.box = box;
  if (map.kind == MapSpec::Kind::Skew) {
    const Vector delta = map.delta;
    p.parametrization = [y, delta](const Vector& t) { return skew_fiber_point(y, delta, t(0)); };
    p.fiber_dim = 1;
  } else {
    p.map = [map](const Vector& x) { return map(x); };
  }
  return p;
}

void contraction_section(RunReport& r, const std::string& check, const ScalarField& inner, const MapSpec& map,
                         const std::vector<Vector>& ys, std::size_t h, double box, const ClosedForm& closed, double tol) {
  const std::size_t k = map.out_dim(h);
  auto& t = r.table("contraction", columns({coords("y", k), {"contract", "closed_form", "abs_diff"}}));
  bool any = false, agree = true;
  double worst = 0.0;
  for (const auto& y : ys) {
    const double v = contract(contraction(inner, map, y, h, box)).value;
    const auto c = closed ? closed(y) : std::nullopt;
    std::optional<double> diff;
    if (c) {
      any = true;
      if (*c == kInf || v == kInf) {
        diff = (*c == v) ? 0.0 : kInf;
        if (*c != v) agree = false;
      } else {
        diff = std::fabs(*c - v);
        worst = std::max(worst, *diff);
        if (*diff > tol) agree = false;
      }
    }
    std::vector<Cell> cells;
    append(cells, y);
    cells.insert(cells.end(), {v, optional_cell(c), optional_cell(diff)});
    t.add_row(std::move(cells));
  }
  if (any)
    r.verdict(check, agree,
              map.name() + " fiber infimum vs closed form: max finite abs diff " + num(worst) + " (tolerance " + num(tol) + ")",
              "contraction");
}

Job prep_contraction_ld(MapReader& m, std::uint64_t) {
  const MixtureLaw law = read_law(m.map("law"));
  const std::size_t h = law.dim();
  const MapSpec map = read_map(m.map("map"), h);
  const auto ys = m.grid("y_grid", map.out_dim(h));
  const double tol = m.number("tolerance", 1e-4, detail::positive());
  const double box = m.number("box", 10.0, detail::positive());
  return [=](RunReport& r) {
    const ScalarField inner = numeric_conjugate(law);
    ClosedForm closed;
    const auto gauss = gaussian_of(law);
    if (gauss) {
      const auto [mu, cov] = *gauss;
      auto quad = [mu, cov](const Vector& x) { return gaussian_quadratic_rate(x - mu, cov); };
      if (map.kind == MapSpec::Kind::Identity) {
        closed = [quad](const Vector& y) -> std::optional<double> { return quad(y); };
      } else if (map.kind == MapSpec::Kind::Logistic) {
        closed = [quad](const Vector& y) -> std::optional<double> {
          auto x = additive_log_ratio(y);
          return x ? quad(*x) : kInf;
        };
      } else if (auto sp = skew_params_of(cov, map.delta); sp && mu.isZero(0.0)) {
        closed = [sp = *sp](const Vector& y) -> std::optional<double> { return skew_md_rate(y, sp).value; };
      }
    } else if (map.kind == MapSpec::Kind::Logistic) {
      closed = [inner](const Vector& y) -> std::optional<double> { return logistic_ld_rate(y, inner); };
    } else if (map.kind == MapSpec::Kind::Identity) {
      closed = [inner](const Vector& y) -> std::optional<double> { return inner(y); };
    }
    contraction_section(r, "contraction-oracle", inner, map, ys, h, box, closed, tol);

    const Vector y0 = map(law.mean());
    const double at_zero = contract(contraction(inner, map, y0, h, box)).value;
    auto& z = r.table("contraction_zero", columns({coords("y", map.out_dim(h)), {"contract"}}));
    std::vector<Cell> cells;
    append(cells, y0);
    cells.emplace_back(at_zero);
    z.add_row(std::move(cells));
    r.verdict("contraction-zero", at_zero <= kZeroTolerance,
              "rate at U(mean) = " + vec(y0) + " is " + num(at_zero), "contraction_zero");
  };
}

Job prep_contraction_weak(MapReader& m, std::uint64_t seed) {
  const MixtureLaw law = read_law(m.map("law"));
  const std::size_t h = law.dim();
  const MapSpec map = read_map(m.map("map"), h);
  const auto n = m.count("n", 1);
  const auto nodes = m.count("nodes", 40, 2);
  if (nodes > 200) m.fail("nodes", "must be at most 200");
  const std::size_t k = map.out_dim(h);
  if (k > 4 && map.kind != MapSpec::Kind::Skew) m.fail("law", "Gaussian quadrature targets are limited to dimension 4");
  WeakConvergenceCheck check = weak_common(m, k);
  check.name = "contraction-weak";
  const Vector mean = law.mean();
  const Matrix cov = law.covariance();
  check.sampler = [law, map, n, mean, k](std::size_t count, std::uint64_t s) {
    const double nn = static_cast<double>(n), root = std::sqrt(nn);
    return generate_batch(count, k, s,
                          [&](Engine& rng, Engine&) { return map((law.sample_sum(n, rng) - nn * mean) / root); },
                          "centered sums through " + map.name());
  };
  if (map.kind == MapSpec::Kind::Skew && skew_params_of(cov, map.delta)) {
    const SkewParams sp = *skew_params_of(cov, map.delta);
    check.target = [sp](const Vector& th) {
      const Vector v = ((1.0 - sp.delta.array().square()).sqrt() * th.array()).matrix();
      return std::exp(0.5 * v.dot(sp.psi * v)) * abs_normal_mgf(th.dot(sp.delta));
    };
  } else {
    const Vector zero = Vector::Zero(static_cast<Eigen::Index>(h));
    const std::size_t q = nodes;
    check.target = [map, zero, cov, q](const Vector& th) {
      return gaussian_expectation([&](const Vector& z) { return std::exp(th.dot(map(z))); }, zero, cov, q);
    };
  }
  return [=](RunReport& r) { weak_section(r, check, check_seed(seed, "weak-limit")); };
}

Job prep_contraction_md(MapReader& m, std::uint64_t) {
  const MixtureLaw law = read_law(m.map("law"));
  const std::size_t h = law.dim();
  const Matrix cov = law.covariance();
  if (Eigen::LLT<Matrix>(cov).info() != Eigen::Success) m.fail("law", "covariance must be positive definite");
  const MapSpec map = read_map(m.map("map"), h);
  const auto ys = m.grid("y_grid", map.out_dim(h));
  const double tol = m.number("tolerance", 1e-4, detail::positive());
  const double box = m.number("box", 10.0, detail::positive());
  return [=](RunReport& r) {
    const ScalarField inner = [cov](const Vector& x) { return gaussian_quadratic_rate(x, cov); };
    ClosedForm closed;
    if (map.kind == MapSpec::Kind::Identity)
      closed = [inner](const Vector& y) -> std::optional<double> { return inner(y); };
    else if (map.kind == MapSpec::Kind::Logistic)
      closed = [cov](const Vector& y) -> std::optional<double> { return logistic_md_rate(y, cov); };
    else if (auto sp = skew_params_of(cov, map.delta))
      closed = [sp = *sp](const Vector& y) -> std::optional<double> { return skew_md_rate(y, sp).value; };
    contraction_section(r, "contraction-oracle", inner, map, ys, h, box, closed, tol);
  };
}

Job prep_logistic_example(MapReader& m, std::uint64_t seed) {
  const std::size_t h = m.length("covariance");
  if (h == 0) m.fail("covariance", "is required");
  const Matrix cov = m.matrix("covariance", h);
  require_pd(m, "covariance", cov);
  const auto ys = m.grid("points", h + 1);
  const double tol = m.number("tolerance", 1e-4, detail::positive());
  const auto trials = m.count("round_trips", 100, 1);
  return [=](RunReport& r) {
    auto& t = r.table("rates", columns({coords("y", h + 1), coords("alr", h), {"closed_form", "contract", "abs_diff"}}));
    const ScalarField inner = [cov](const Vector& x) { return gaussian_quadratic_rate(x, cov); };
    MapSpec map;
    map.kind = MapSpec::Kind::Logistic;
    bool agree = true, boundary_ok = true;
    std::size_t boundary = 0;
    double worst = 0.0;
    for (const auto& y : ys) {
      const auto x = additive_log_ratio(y);
      const double closed = logistic_md_rate(y, cov);
      const double v = contract(contraction(inner, map, y, h, 10.0)).value;
      double diff = 0.0;
      if (!x) {
        ++boundary;
        if (closed != kInf || v != kInf) boundary_ok = false;
      } else if (v == kInf) {
        diff = kInf;
        agree = false;
      } else {
        diff = std::fabs(v - closed);
        worst = std::max(worst, diff);
        if (diff > tol) agree = false;
      }
      std::vector<Cell> cells;
      append(cells, y);
      for (std::size_t j = 0; j < h; ++j) cells.push_back(x ? Cell((*x)(static_cast<Eigen::Index>(j))) : Cell(std::string("-")));
      cells.insert(cells.end(), {closed, v, diff});
      t.add_row(std::move(cells));
    }
    r.verdict("contraction-oracle", agree,
              "fiber infimum vs quadratic form at the log-ratios: max abs diff " + num(worst) + " (tolerance " + num(tol) + ")",
              "rates");
    if (boundary > 0)
      r.verdict("simplex-boundary", boundary_ok, std::to_string(boundary) + " points off the open simplex give +inf", "rates");

    auto& rt = r.table("round_trip", {"trial", "max_abs_error"});
    Engine rng = make_stream(check_seed(seed, "alr-inverse"), 0);
    std::normal_distribution<double> nd(0.0, 3.0);
    double max_err = 0.0;
    for (std::uint64_t i = 0; i < trials; ++i) {
      Vector x(static_cast<Eigen::Index>(h));
      for (auto& v : x) v = nd(rng);
      const auto back = additive_log_ratio(logistic_map(x));
      const double err = back ? (*back - x).cwiseAbs().maxCoeff() : kInf;
      max_err = std::max(max_err, err);
      rt.add_row({static_cast<double>(i + 1), err});
    }
    r.verdict("alr-inverse", max_err <= 1e-9, "log-ratios invert the logistic map to " + num(max_err), "round_trip");
  };
}

Job prep_skew_example(MapReader& m, std::uint64_t) {
  const std::size_t k = m.length("delta");
  if (k == 0) m.fail("delta", "is required");
  SkewParams sp{m.matrix("psi", k), m.vector("delta", k)};
  guarded(m, [&] {
    sp.validate();
    return 0;
  });
  const auto ys = m.grid("y_grid", k);
  const double tol = m.number("tolerance", 1e-4, detail::positive());
  const double box = m.number("box", 10.0, detail::positive());
  return [=](RunReport& r) {
    auto& t = r.table("rates", columns({coords("y", k), {"branch", "x_hat", "I_MD", "contract", "unskewed", "abs_diff"}}));
    const Matrix full = sp.full_covariance();
    const ScalarField inner = [full](const Vector& x) { return gaussian_quadratic_rate(x, full); };
    MapSpec map;
    map.kind = MapSpec::Kind::Skew;
    map.delta = sp.delta;
    bool agree = true, quad_ok = true;
    double worst = 0.0, worst_quad = 0.0;
    const bool unskewed = sp.delta.isZero(0.0);
    for (const auto& y : ys) {
      const SkewRate sr = skew_md_rate(y, sp);
      const double v = contract(contraction(inner, map, y, k + 1, box)).value;
      const double quad = gaussian_quadratic_rate(y, sp.psi);
      const double diff = v == kInf ? kInf : std::fabs(v - sr.value);
      worst = std::max(worst, diff);
      if (!(diff <= tol)) agree = false;
      if (unskewed) {
        worst_quad = std::max(worst_quad, std::fabs(sr.value - quad));
        if (std::fabs(sr.value - quad) > 1e-12) quad_ok = false;
      }
      std::vector<Cell> cells;
      append(cells, y);
      cells.insert(cells.end(), {static_cast<double>(sr.branch), sr.x_hat, sr.value, v, quad, diff});
      t.add_row(std::move(cells));
    }
    r.verdict("contraction-oracle", agree,
              "two-branch closed form vs fiber infimum: max abs diff " + num(worst) + " (tolerance " + num(tol) + ")", "rates");
    if (unskewed)
      r.verdict("zero-skew-quadratic", quad_ok, "delta = 0 reduces to <y, Psi^{-1} y>/2, max abs diff " + num(worst_quad),
                "rates");
  };
}

// ---------------------------------------------------------------------------
// Registry

struct Entry {
  FamilyInfo info;
  Job (*prepare)(MapReader&, std::uint64_t);
  const char* body;  // template body after the header fields
};

const std::vector<Entry>& entries() {
  static const std::vector<Entry> list = {
      {{"imm-ld", "Large deviations of S(L_nu(t))/t for an inverse stable clock",
        "(1/t) log E exp(<theta, S(L_nu(t))>) -> f_nu(kappa_S(theta)); LDP with speed t and rate the conjugate of f_nu o kappa_S",
        {"nu", "driver", "theta_grid", "horizons"}, {"tolerance", "calibration", "x_grid", "rate_tolerance"}},
       prep_imm_ld,
       R"(nu: 0.5
driver: {kind: brownian, covariance: 1}
theta_grid: {lo: -1, hi: 1, points: 5}
horizons: [1e2, 1e4, 1e6]
tolerance: 1e-3
x_grid: {lo: -2, hi: 2, points: 9}
)"},
      {{"imm-weak", "Weak limit of t^alpha(nu) S(L_nu(t))/t",
        "t^alpha(nu) S(L_nu(t))/t converges weakly; limit MGF E_nu(<theta, Q theta>/2) without drift, E_nu(<theta, grad kappa_S(0)>) with drift",
        {"nu", "driver", "time", "samples", "theta_grid"}, {"se_multiplier"}},
       prep_imm_weak,
       R"(nu: 0.5
driver: {kind: brownian, covariance: [[1, 0], [0, 1]]}
time: 1e4
samples: 1e5
theta_grid: [[0, 0], [0.5, 0], [0, -0.5], [0.3, 0.3]]
)"},
      {{"imm-md", "Noncentral moderate deviations for the inverse stable time change",
        "(a_t t)^alpha(nu) S(L_nu(t))/t satisfies an LDP with speed 1/a_t; limit (<theta, Q theta>/2)^{1/nu} or <theta, m>^{1/nu} on <theta, m> >= 0",
        {"nu", "driver", "beta", "theta_grid", "horizons"}, {"tolerance", "calibration", "x_grid", "rate_tolerance"}},
       prep_imm_md,
       R"(nu: 0.5
driver: {kind: brownian, covariance: 1}
beta: 0.5
theta_grid: {lo: -1, hi: 1, points: 5}
horizons: [1e4, 1e6, 1e8]
tolerance: 2e-2
calibration: "errors measured over 1e4, 1e6, 1e8 fall by about a decade per two decades of t"
x_grid: {lo: -1, hi: 1, points: 9}
)"},
      {{"imm-explicit-cases", "Explicit cases of the drift-driven moderate deviation rate",
        "+inf when some x_i m_i < 0, +inf when m_i = 0 and x_i != 0, H_nu(c; 1) along the ray x = c m",
        {"nu", "m", "points"}, {"tolerance"}},
       prep_imm_explicit_cases,
       R"(nu: [0.4, 0.5, 0.7]
m: [2, 1]
points: [[0, 0], [1, 0.5], [2, 1], [0.5, 0.25], [-1, 0.5], [1, -0.5]]
)"},
      {{"levy-ld", "Large deviations of S(V(t))/t for a subordinator clock",
        "S(V(t))/t satisfies an LDP with speed t and rate the conjugate of kappa_V(kappa_S(theta))",
        {"clock", "driver", "x_grid"}, {"tolerance"}},
       prep_levy_ld,
       R"(clock: {kind: gamma, shape: 2, rate: 1}
driver: {kind: drift, velocity: [1]}
x_grid: {lo: 0.5, hi: 5, points: 10}
)"},
      {{"levy-weak", "Weak limit of S(V(t)/t)",
        "S(V(t)/t) converges weakly to S(kappa_V'(0)); limit MGF exp(kappa_V'(0) kappa_S(theta))",
        {"clock", "driver", "time", "samples", "theta_grid"}, {"se_multiplier"}},
       prep_levy_weak,
       R"(clock: {kind: poisson, rate: 1}
driver: {kind: brownian, covariance: 1}
time: 1e4
samples: 1e5
theta_grid: [0, 0.5, -0.5, 1]
)"},
      {{"levy-md", "Moderate deviations of a_t S(V(t)/(t a_t))",
        "a_t S(V(t)/(t a_t)) satisfies an LDP with speed 1/a_t; limit kappa_V'(0) kappa_S(theta)",
        {"clock", "driver", "beta", "theta_grid", "horizons"}, {"tolerance", "calibration", "x_grid", "rate_tolerance"}},
       prep_levy_md,
       R"(clock: {kind: gamma, shape: 1, rate: 1}
driver: {kind: brownian, covariance: 1}
beta: 0.5
theta_grid: {lo: -1, hi: 1, points: 5}
horizons: [1e2, 1e4, 1e6]
tolerance: 1e-3
x_grid: {lo: -2, hi: 2, points: 9}
)"},
      {{"levy-inequality", "Moderate deviation rate dominates the large deviation rate",
        "I_MD(x) >= I_LD(x), both vanishing only at kappa_V'(0) grad kappa_S(0)",
        {"pairs"}, {"slack"}},
       prep_levy_inequality,
       R"(pairs:
  - clock: {kind: gamma, shape: 2, rate: 1}
    driver: {kind: brownian, drift: [0.5], covariance: 1}
    x_grid: {lo: -2, hi: 3, points: 11}
  - clock: {kind: poisson, rate: 1.5}
    driver: {kind: compound_poisson, rate: 1, jumps: {kind: point, at: [1]}}
    x_grid: {lo: 0.25, hi: 4, points: 16}
)"},
      {{"poisson-ld", "Large deviations of the triangular array mean at fixed p",
        "S_n/n satisfies an LDP with speed n and rate the conjugate of log(1 + p (G(theta) - 1))",
        {"p", "jumps", "x_grid"}, {"tolerance", "tail", "mc_tail"}},
       prep_poisson_ld,
       R"(p: 0.5
jumps: {kind: point, at: [1]}
x_grid: {lo: 0.05, hi: 0.95, points: 10}
tail: {level: 0.75, horizons: [250, 500, 1000, 2000], tolerance: 0.01}
)"},
      {{"poisson-weak", "Compound Poisson weak limit of triangular array sums",
        "sums of n summands with p_n = lambda/n converge weakly to a compound Poisson law with MGF exp(lambda (G(theta) - 1))",
        {"lambda", "jumps", "n", "samples", "theta_grid"}, {"se_multiplier"}},
       prep_poisson_weak,
       R"(lambda: 2
jumps: {kind: point, at: [1]}
n: 1e4
samples: 1e5
theta_grid: [0, 0.3, -0.5, 0.6]
)"},
      {{"poisson-md", "Noncentral moderate deviations for triangular arrays",
        "a_n S_n with p_n = lambda/(n a_n) satisfies an LDP with speed 1/a_n; limit lambda (G(theta) - 1)",
        {"lambda", "jumps", "beta", "theta_grid", "horizons"},
        {"tolerance", "calibration", "x_grid", "rate_tolerance", "tail"}},
       prep_poisson_md,
       R"(lambda: 1
jumps: {kind: point, at: [1]}
beta: 0.1
theta_grid: {lo: -0.5, hi: 0.5, points: 5}
horizons: [1e2, 1e4, 1e6]
tolerance: 1e-6
x_grid: {lo: 0.25, hi: 3, points: 12}
)"},
      {{"poisson-inequality", "Large deviation rate dominates the moderate deviation rate",
        "I_LD(x) >= I_MD(x) with lambda = p; I_LD - I_MD attains its minimum 0 at x = p",
        {"p", "x_grid"}, {"tolerance"}},
       prep_poisson_inequality,
       R"(p: 0.5
x_grid: {lo: 0, hi: 1, points: 101}
)"},
      {{"contraction-ld", "Large deviations of U(S_n/n) by contraction",
        "U(S_n/n) satisfies an LDP with speed n and rate inf{kappa_X^*(x) : U(x) = y}",
        {"law", "map", "y_grid"}, {"tolerance", "box"}},
       prep_contraction_ld,
       R"(law: {kind: gaussian, mean: [0, 0], covariance: [[1, 0], [0, 1]]}
map: {kind: logistic}
y_grid: [[0.2, 0.3, 0.5], [0.6, 0.2, 0.2], [0.3333333333333333, 0.3333333333333333, 0.3333333333333334], [0.5, 0.5, 0]]
)"},
      {{"contraction-weak", "Weak limit of U((S_n - n mu)/sqrt(n))",
        "U((S_n - n mu)/sqrt(n)) converges weakly to U(Z) with Z ~ N(0, H kappa_X(0))",
        {"law", "map", "n", "samples", "theta_grid"}, {"se_multiplier", "nodes"}},
       prep_contraction_weak,
       R"(law: {kind: rademacher, dim: 2}
map: {kind: skew, delta: [0.6]}
n: 400
samples: 1e5
theta_grid: [0, 0.5, -0.5, 1]
)"},
      {{"contraction-md", "Moderate deviations of U((S_n - n mu)/sqrt(n/a_n)) by contraction",
        "the transformed fluctuations satisfy an LDP with speed 1/a_n and rate inf{<x, H^{-1} x>/2 : U(x) = y}",
        {"law", "map", "y_grid"}, {"tolerance", "box"}},
       prep_contraction_md,
       R"(law: {kind: rademacher, dim: 2}
map: {kind: skew, delta: [0.6]}
y_grid: {lo: -2, hi: 2, points: 9}
)"},
      {{"logistic-example", "Logistic normal moderate deviation rate on the simplex",
        "I(y) = <alr(y), H^{-1} alr(y)>/2 on the open simplex, +inf on its boundary",
        {"covariance", "points"}, {"tolerance", "round_trips"}},
       prep_logistic_example,
       R"(covariance: [[1, 0.3], [0.3, 2]]
points: [[0.2, 0.3, 0.5], [0.1, 0.1, 0.8], [0.3333333333333333, 0.3333333333333333, 0.3333333333333334], [0, 0.5, 0.5]]
)"},
      {{"skew-example", "Skew normal moderate deviation rate",
        "two-branch closed form in <a, Psi^{-1} a>, <a, Psi^{-1} b>, <b, Psi^{-1} b> with minimizer x_hat",
        {"psi", "delta", "y_grid"}, {"tolerance", "box"}},
       prep_skew_example,
       R"(psi: 1
delta: [0.6]
y_grid: {lo: -2, hi: 2, points: 9}
)"},
  };
  return list;
}

const Entry* find_entry(const std::string& id) {
  for (const auto& e : entries())
    if (e.info.id == id) return &e;
  return nullptr;
}

nlohmann::json yaml_to_json(const YAML::Node& n) {
  switch (n.Type()) {
    case YAML::NodeType::Map: {
      nlohmann::json j = nlohmann::json::object();
      for (const auto& kv : n) j[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return j;
    }
    case YAML::NodeType::Sequence: {
      nlohmann::json j = nlohmann::json::array();
      for (const auto& e : n) j.push_back(yaml_to_json(e));
      return j;
    }
    case YAML::NodeType::Scalar:
      return n.Scalar();
    default:
      return nullptr;
  }
}

}  // namespace

const std::vector<FamilyInfo>& catalog() {
  static const std::vector<FamilyInfo> list = [] {
    std::vector<FamilyInfo> out;
    for (const auto& e : entries()) out.push_back(e.info);
    return out;
  }();
  return list;
}

const FamilyInfo* find_family(const std::string& id) {
  const Entry* e = find_entry(id);
  return e ? &e->info : nullptr;
}

std::string template_config(const std::string& family) {
  const Entry* e = find_entry(family);
  if (!e) throw std::invalid_argument("unknown family '" + family + "'");
  return "id: " + family + "\nfamily: " + family + "\nseed: 20240101\n" + e->body;
}

std::uint64_t check_seed(std::uint64_t run_seed, const std::string& check) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : check) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(run_seed ^ h);
}

RunReport run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  if (!config.document) throw std::invalid_argument("run_experiment: configuration has no document");
  const auto& doc = *config.document;
  MapReader top(doc.root, "", doc.source);
  const Entry* entry = find_entry(config.family);
  if (!entry) {
    std::string list;
    for (const auto& e : entries()) list += (list.empty() ? "" : ", ") + e.info.id;
    top.fail("family", "unknown family '" + config.family + "' (expected one of " + list + ")");
  }
  top.text("id");
  top.text("family");
  top.text("seed");
  top.text("output", "");

  RunReport report;
  report.id = config.id;
  report.family = config.family;
  report.seed = options.seed_override.value_or(config.seed);
  report.config_path = config.source;
  report.config = yaml_to_json(doc.root);

  Job job = entry->prepare(top, report.seed);
  top.finish();
  if (options.validate_only) return report;

  const auto start = std::chrono::steady_clock::now();
  try {
    job(report);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    report.verdict("run", false, std::string("computation failed: ") + e.what());
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace ncmd
