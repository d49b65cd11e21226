#include "ncmd/convergence_lab.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ncmd/mittag_leffler.hpp"

namespace ncmd {

namespace {

std::string horizon_str(double h) {
  std::ostringstream os;
  os << h;
  return os.str();
}

void require_power(const ScalingRegime& s, const char* who) {
  if (s.family != ScalingRegime::Family::Power)
    throw std::invalid_argument(std::string(who) + ": needs a_t = t^-beta with beta in (0,1)");
}

}  // namespace

// ---------------------------------------------------------------------------
// Scaled cumulant limits

bool non_increasing_tail(const std::vector<double>& values, std::size_t count) {
  if (values.size() < 2) return true;
  const std::size_t start = values.size() > count ? values.size() - count : 0;
  for (std::size_t i = start + 1; i < values.size(); ++i)
    if (values[i] > values[i - 1] + 1e-15) return false;
  return true;
}

ScgfReport run_scgf_check(const ScgfLimitCheck& check) {
  if (check.grid.empty() || check.horizons.empty()) throw std::invalid_argument("run_scgf_check: empty grid or schedule");
  ScgfReport rep;
  rep.tolerance = check.tolerance;
  rep.calibration = check.calibration;
  rep.horizons = check.horizons;
  for (double t : check.horizons) {
    double worst = 0.0;
    for (const auto& theta : check.grid) {
      const double pre = check.prelimit(t, theta);
      const double lim = check.limit(theta);
      if (!std::isfinite(pre) || !std::isfinite(lim))
        throw std::domain_error("run_scgf_check(" + check.name + "): non-finite value at horizon " + horizon_str(t));
      const double err = std::fabs(pre - lim);
      worst = std::max(worst, err);
      rep.rows.push_back({t, theta, pre, lim, err});
    }
    rep.max_errors.push_back(worst);
  }
  rep.final_within = rep.max_errors.back() <= check.tolerance;
  rep.decreasing = non_increasing_tail(rep.max_errors, 3);
  rep.pass = rep.final_within && rep.decreasing;
  return rep;
}

ScgfLimitCheck scgf_imm_ld(double nu, const CumulantSpec& kappa_s) {
  ScgfLimitCheck c;
  c.name = "imm-ld";
  auto ks = kappa_s.eval;
  c.prelimit = [nu, ks](double t, const Vector& theta) {
    const double k = ks(theta);
    if (k == kInf) return kInf;
    return ml_log_eval(nu, k * std::pow(t, nu)) / t;
  };
  c.limit = LimitCumulant::imm_ld(nu, kappa_s).function();
  return c;
}

ScgfLimitCheck scgf_imm_md(double nu, const CumulantSpec& kappa_s, const ScalingRegime& scaling) {
  require_power(scaling, "scgf_imm_md");
  const bool driftless = kappa_s.grad0.isZero(0.0);
  const double alpha = alpha_exponent(nu, driftless);
  if (scaling.alpha && std::fabs(*scaling.alpha - alpha) > 1e-12)
    throw std::invalid_argument("scgf_imm_md: alpha does not match the driver");
  ScgfLimitCheck c;
  c.name = "imm-md";
  auto ks = kappa_s.eval;
  c.prelimit = [nu, ks, alpha, scaling](double t, const Vector& theta) {
    const double a = scaling.a(t);
    const double k = ks(theta / std::pow(a * t, 1.0 - alpha));
    if (k == kInf) return kInf;
    return a * ml_log_eval(nu, k * std::pow(t, nu));
  };
  c.limit = LimitCumulant::imm_md(nu, kappa_s).function();
  return c;
}

ScgfLimitCheck scgf_levy_md(const SubordinatorModel& clock, const CumulantSpec& kappa_s, const ScalingRegime& scaling) {
  require_power(scaling, "scgf_levy_md");
  ScgfLimitCheck c;
  c.name = "levy-md";
  auto ks = kappa_s.eval;
  auto kv = clock.cumulant().eval;
  c.prelimit = [ks, kv, scaling](double t, const Vector& theta) {
    const double a = scaling.a(t);
    const double k = ks(theta);
    if (k == kInf) return kInf;
    return a * t * kv(Vector::Constant(1, k / (t * a)));
  };
  c.limit = LimitCumulant::levy_md(clock.mean_rate(), kappa_s).function();
  return c;
}

ScgfLimitCheck scgf_poisson_md(double lambda, const MixtureLaw& jumps, const ScalingRegime& scaling) {
  require_power(scaling, "scgf_poisson_md");
  ScgfLimitCheck c;
  c.name = "poisson-md";
  c.prelimit = [lambda, jumps, scaling](double n, const Vector& theta) {
    const double pn = lambda / (n * scaling.a(n));
    if (!(pn > 0.0 && pn <= 1.0)) throw std::domain_error("scgf_poisson_md: p_n outside (0,1]");
    const double lg = jumps.log_mgf(theta);
    if (lg == kInf) return kInf;
    return lambda / pn * std::log1p(pn * std::expm1(lg));
  };
  c.limit = LimitCumulant::poisson_md(lambda, jumps).function();
  return c;
}

// ---------------------------------------------------------------------------
// Weak convergence

std::pair<double, double> empirical_mgf(const SampleBatch& batch, const Vector& theta) {
  if (static_cast<std::size_t>(theta.size()) != batch.dim())
    throw std::invalid_argument("empirical_mgf: theta has the wrong dimension");
  const Vector values = (batch.draws * theta).array().exp().matrix();
  const double n = static_cast<double>(values.size());
  const double mean = values.mean();
  const double var = n > 1 ? (values.array() - mean).square().sum() / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

WeakReport run_weak_convergence(const WeakConvergenceCheck& check, std::uint64_t seed) {
  if (check.batch_size < 10000) throw std::invalid_argument("run_weak_convergence: batch size must be at least 10^4");
  if (check.grid.empty()) throw std::invalid_argument("run_weak_convergence: empty grid");
  std::vector<double> targets;
  for (const auto& theta : check.grid) {
    const double t = check.target(theta);
    if (!std::isfinite(t)) throw std::domain_error("run_weak_convergence(" + check.name + "): target MGF is infinite");
    targets.push_back(t);
  }
  const SampleBatch batch = check.sampler(check.batch_size, seed);
  WeakReport rep;
  rep.se_multiplier = check.se_multiplier;
  rep.batch_size = check.batch_size;
  for (std::size_t i = 0; i < check.grid.size(); ++i) {
    const auto [mean, se] = empirical_mgf(batch, check.grid[i]);
    WeakRow row{check.grid[i], mean, targets[i], se, 0.0};
    const double diff = mean - targets[i];
    if (se > 0.0)
      row.z = diff / se;
    else if (std::fabs(diff) > 1e-12 * std::max(1.0, std::fabs(targets[i])))
      row.z = std::copysign(kInf, diff);
    rep.max_abs_z = std::max(rep.max_abs_z, std::fabs(row.z));
    rep.rows.push_back(row);
  }
  rep.pass = rep.max_abs_z <= check.se_multiplier;
  return rep;
}

// ---------------------------------------------------------------------------
// Binomial enumeration

BinomialTail binomial_log_tail(std::uint64_t n, double p, std::uint64_t k) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binomial_log_tail: p must lie in [0,1]");
  BinomialTail out;
  if (k == 0) {
    out.log_upper = 0.0;
    out.log_lower = -kInf;
    return out;
  }
  if (k > n) {
    out.log_upper = -kInf;
    out.log_lower = 0.0;
    return out;
  }
  if (p == 0.0 || p == 1.0) {
    const bool upper = p == 1.0;  // all mass at n (k <= n) or at 0 (k >= 1)
    out.log_upper = upper ? 0.0 : -kInf;
    out.log_lower = upper ? -kInf : 0.0;
    return out;
  }

  using ld = long double;
  const ld logit = std::log(static_cast<ld>(p)) - std::log1p(-static_cast<ld>(p));
  const ld nn = static_cast<ld>(n);
  // log pmf(j) - log pmf(mode)
  const std::uint64_t mode = std::min<std::uint64_t>(n, static_cast<std::uint64_t>(std::floor((nn + 1) * p)));
  auto rel = [&](std::uint64_t j) {
    const ld a = static_cast<ld>(mode), b = static_cast<ld>(j);
    return std::lgamma(a + 1) + std::lgamma(nn - a + 1) - std::lgamma(b + 1) - std::lgamma(nn - b + 1) + (b - a) * logit;
  };
  auto up_step = [&](std::uint64_t j) { return std::log((nn - static_cast<ld>(j)) / (static_cast<ld>(j) + 1)) + logit; };
  constexpr ld kNegligible = -80.0L;  // e^-80 relative to the running sum

  ld upper = 0.0L, lower = 0.0L;
  // walk up from max(mode, k) for the upper part, down from min(mode, k-1)
  // for the lower part; each side is a log-concave sequence
  {
    std::uint64_t j = std::max(mode, k);
    ld l = j == mode ? 0.0L : rel(j);
    const ld lead = l;
    for (;;) {
      upper += std::exp(l - lead);
      if (j == n || l - lead < kNegligible + std::log(upper)) break;
      l += up_step(j);
      ++j;
    }
    upper = std::log(upper) + lead;
    if (k < mode) {
      // mass between k and mode - 1
      ld acc = 0.0L;
      ld lj = rel(mode - 1);
      const ld lead2 = lj;
      for (std::uint64_t i = mode - 1;; --i) {
        acc += std::exp(lj - lead2);
        if (i == k) break;
        lj -= up_step(i - 1);
      }
      const ld extra = std::log(acc) + lead2;
      const ld hi = std::max(upper, extra);
      upper = hi + std::log(std::exp(upper - hi) + std::exp(extra - hi));
    }
  }
  {
    std::uint64_t j = std::min(mode, k - 1);
    ld l = j == mode ? 0.0L : rel(j);
    const ld lead = l;
    for (;;) {
      lower += std::exp(l - lead);
      if (j == 0 || l - lead < kNegligible + std::log(lower)) break;
      l -= up_step(j - 1);
      --j;
    }
    lower = std::log(lower) + lead;
    if (k - 1 > mode) {
      // mass between mode + 1 and k - 1
      ld acc = 0.0L;
      ld lj = rel(mode + 1);
      const ld lead2 = lj;
      for (std::uint64_t i = mode + 1;; ++i) {
        acc += std::exp(lj - lead2);
        if (i == k - 1) break;
        lj += up_step(i);
      }
      const ld extra = std::log(acc) + lead2;
      const ld hi = std::max(lower, extra);
      lower = hi + std::log(std::exp(lower - hi) + std::exp(extra - hi));
    }
  }
  const ld hi = std::max(upper, lower);
  const ld total = hi + std::log(std::exp(upper - hi) + std::exp(lower - hi));
  out.log_upper = static_cast<double>(upper - total);
  out.log_lower = static_cast<double>(lower - total);
  return out;
}

TailReport run_tail_decay(const BinomialTailCheck& check) {
  if (check.horizons.empty()) throw std::invalid_argument("run_tail_decay: empty schedule");
  TailReport rep;
  rep.target = check.target;
  rep.tolerance = check.tolerance;
  std::vector<double> errors;
  for (double h : check.horizons) {
    const auto n = static_cast<std::uint64_t>(std::llround(h));
    TailRow row;
    row.horizon = static_cast<double>(n);
    if (check.whole_space) {
      row.log_probability = 0.0;
    } else {
      const double s = check.scale(row.horizon);
      auto k = static_cast<std::uint64_t>(std::max(0.0, std::ceil(check.threshold / s)));
      if (k > 0 && s * static_cast<double>(k - 1) >= check.threshold) --k;
      row.log_probability = binomial_log_tail(n, check.p(row.horizon), k).log_upper;
    }
    row.decay = row.log_probability / check.speed(row.horizon);
    row.error = std::fabs(row.decay - check.target);
    if (row.log_probability == -kInf) rep.note = "zero probability at n = " + horizon_str(row.horizon);
    errors.push_back(row.error);
    rep.rows.push_back(row);
  }
  rep.pass = rep.note.empty() && errors.back() <= check.tolerance && non_increasing_tail(errors, 3);
  return rep;
}

BinomialTailCheck binomial_ld_tail(double p, double level, std::vector<double> horizons, double tolerance) {
  BinomialTailCheck c;
  c.name = "binomial-ld";
  c.p = [p](double) { return p; };
  c.scale = [](double n) { return 1.0 / n; };
  c.speed = [](double n) { return n; };
  c.threshold = level;
  c.horizons = std::move(horizons);
  c.target = -binomial_poisson_rates(std::max(level, p), p).ld;
  c.tolerance = tolerance;
  return c;
}

BinomialTailCheck binomial_md_tail(double lambda, double beta, double level, std::vector<double> horizons,
                                   double tolerance) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("binomial_md_tail: beta must lie in (0,1)");
  BinomialTailCheck c;
  c.name = "binomial-md";
  c.p = [lambda, beta](double n) { return std::min(1.0, lambda * std::pow(n, beta - 1.0)); };
  c.scale = [beta](double n) { return std::pow(n, -beta); };
  c.speed = [beta](double n) { return std::pow(n, beta); };
  c.threshold = level;
  c.horizons = std::move(horizons);
  c.target = -poisson_rate(std::max(level, lambda), lambda);
  c.tolerance = tolerance;
  return c;
}

// ---------------------------------------------------------------------------
// Tilted Monte Carlo

std::pair<Vector, double> half_space_tilt(const MixtureLaw& law, const Vector& direction, double level) {
  if (direction.size() != static_cast<Eigen::Index>(law.dim()) || direction.norm() == 0.0)
    throw std::invalid_argument("half_space_tilt: direction must be a nonzero vector of the law's dimension");
  auto slope = [&](double s) { return direction.dot(law.tilted(s * direction).mean()); };
  if (slope(0.0) >= level) return {Vector::Zero(direction.size()), 0.0};
  double lo = 0.0, hi = 1.0;
  int doublings = 0;
  while (slope(hi) < level) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > 60) throw std::domain_error("half_space_tilt: level lies outside the support");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (slope(mid) < level ? lo : hi) = mid;
  }
  const double s = 0.5 * (lo + hi);
  const Vector theta = s * direction;
  return {theta, -(s * level - law.log_mgf(theta))};
}

TiltedTailEstimate tilted_tail_probability(const MixtureLaw& law, const Vector& direction, double level,
                                           std::uint64_t n, const Vector& tilt, std::size_t samples,
                                           std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("tilted_tail_probability: n must be positive");
  const MixtureLaw proposal = law.tilted(tilt);
  const double kappa = law.log_mgf(tilt);
  const double nn = static_cast<double>(n);
  const SampleBatch batch = generate_batch(
      samples, 1, seed,
      [&](Engine& rng, Engine&) {
        const Vector s = proposal.sample_sum(n, rng);
        if (direction.dot(s) / nn < level) return Vector::Zero(1).eval();
        return Vector::Constant(1, std::exp(-tilt.dot(s) + nn * kappa)).eval();
      },
      "tilted tail");
  const auto w = batch.draws.col(0);
  TiltedTailEstimate est;
  est.hits = static_cast<std::size_t>((w.array() > 0.0).count());
  est.probability = w.mean();
  const double m = static_cast<double>(samples);
  est.std_error = m > 1 ? std::sqrt((w.array() - est.probability).square().sum() / (m - 1.0) / m) : 0.0;
  return est;
}

TailReport run_tail_decay(const TiltedTailCheck& check, std::uint64_t seed) {
  if (check.horizons.empty()) throw std::invalid_argument("run_tail_decay: empty schedule");
  const auto [default_tilt, target] = half_space_tilt(check.law, check.direction, check.level);
  Vector tilt = check.tilt ? *check.tilt : default_tilt;
  if (!check.use_tilt) tilt = Vector::Zero(check.direction.size());
  TailReport rep;
  rep.target = target;
  rep.tolerance = check.tolerance;
  std::vector<double> errors;
  for (std::size_t i = 0; i < check.horizons.size(); ++i) {
    const std::uint64_t n = check.horizons[i];
    const auto est =
        tilted_tail_probability(check.law, check.direction, check.level, n, tilt, check.samples, splitmix64(seed + i));
    TailRow row;
    row.horizon = static_cast<double>(n);
    row.log_probability = est.probability > 0.0 ? std::log(est.probability) : -kInf;
    row.decay = row.log_probability / row.horizon;
    row.error = std::fabs(row.decay - target);
    row.std_error = est.std_error;
    if (est.hits == 0 && rep.note.empty())
      rep.note = "zero estimated probability at n = " + horizon_str(row.horizon) +
                 (check.use_tilt ? "" : " (no tilt)");
    errors.push_back(row.error);
    rep.rows.push_back(row);
  }
  rep.pass = rep.note.empty() && errors.back() <= check.tolerance && non_increasing_tail(errors, 3);
  return rep;
}

}  // namespace ncmd
