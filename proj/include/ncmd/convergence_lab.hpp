#pragma once

// Verification harness: scaled cumulant limits evaluated from exact formulas,
// Monte Carlo MGF checks of weak limits, and tail decay rates.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ncmd/levy_models.hpp"
#include "ncmd/random_time.hpp"
#include "ncmd/rate_functions.hpp"

namespace ncmd {

// ---------------------------------------------------------------------------
// Scaled cumulant limits

struct ScgfLimitCheck {
  std::string name;
  /// (horizon, theta) -> (1/v) log E exp(v <theta, B>)
  std::function<double(double, const Vector&)> prelimit;
  ScalarField limit;
  std::vector<Vector> grid;
  std::vector<double> horizons;  // increasing
  double tolerance = 1e-3;
  std::string calibration;  // how the tolerance was chosen
};

struct ScgfRow {
  double horizon = 0.0;
  Vector theta;
  double prelimit = 0.0;
  double limit = 0.0;
  double error = 0.0;
};

struct ScgfReport {
  std::vector<double> horizons;
  std::vector<double> max_errors;  // one per horizon
  std::vector<ScgfRow> rows;
  double tolerance = 0.0;
  bool final_within = false;
  bool decreasing = false;
  bool pass = false;
  std::string calibration;
};

/// Throws std::domain_error on a non-finite prelimit or limit value.
ScgfReport run_scgf_check(const ScgfLimitCheck& check);

/// True when the last `count` entries never increase (up to 1e-15 slack).
bool non_increasing_tail(const std::vector<double>& values, std::size_t count = 3);

/// (1/t) log E_nu(kappa_S(theta) t^nu) -> f_nu(kappa_S(theta))
ScgfLimitCheck scgf_imm_ld(double nu, const CumulantSpec& kappa_s);
/// a_t log E_nu(kappa_S(theta / (a_t t)^{1-alpha}) t^nu) -> the moderate limit
ScgfLimitCheck scgf_imm_md(double nu, const CumulantSpec& kappa_s, const ScalingRegime& scaling);
/// a_t t kappa_V(kappa_S(theta) / (t a_t)) -> kappa_V'(0) kappa_S(theta)
ScgfLimitCheck scgf_levy_md(const SubordinatorModel& clock, const CumulantSpec& kappa_s, const ScalingRegime& scaling);
/// n a_n log(1 + p_n (G - 1)) with p_n = lambda / (n a_n) -> lambda (G - 1)
ScgfLimitCheck scgf_poisson_md(double lambda, const MixtureLaw& jumps, const ScalingRegime& scaling);

// ---------------------------------------------------------------------------
// Weak convergence through MGFs

struct WeakConvergenceCheck {
  std::string name;
  std::function<SampleBatch(std::size_t n, std::uint64_t seed)> sampler;
  ScalarField target;  // limit MGF
  std::vector<Vector> grid;
  std::size_t batch_size = 100000;
  double se_multiplier = 4.0;
};

struct WeakRow {
  Vector theta;
  double empirical = 0.0;
  double target = 0.0;
  double se = 0.0;
  double z = 0.0;
};

struct WeakReport {
  std::vector<WeakRow> rows;
  double max_abs_z = 0.0;
  double se_multiplier = 4.0;
  std::size_t batch_size = 0;
  bool pass = false;
};

/// Empirical MGF of one batch against the target at every grid point.
/// Throws std::invalid_argument for batches below 10^4 draws and
/// std::domain_error when the target is infinite on the grid.
WeakReport run_weak_convergence(const WeakConvergenceCheck& check, std::uint64_t seed);

/// Sample mean and standard error of exp(<theta, row>).
std::pair<double, double> empirical_mgf(const SampleBatch& batch, const Vector& theta);

// ---------------------------------------------------------------------------
// Tail decay

/// Binomial(n, p) tail masses in log space, normalized over the enumerated
/// support so that upper and lower add to one.
struct BinomialTail {
  double log_upper = 0.0;  // log P(K >= k)
  double log_lower = 0.0;  // log P(K < k)
};

BinomialTail binomial_log_tail(std::uint64_t n, double p, std::uint64_t k);

/// B_n = scale(n) K with K ~ Binomial(n, p(n)), set {B_n >= threshold} (or
/// the whole line), speed v(n).
struct BinomialTailCheck {
  std::string name;
  std::function<double(double)> p;
  std::function<double(double)> scale;
  std::function<double(double)> speed;
  double threshold = 0.0;
  bool whole_space = false;
  std::vector<double> horizons;
  double target = 0.0;  // -inf of the rate over the set
  double tolerance = 0.01;
};

struct TailRow {
  double horizon = 0.0;
  double log_probability = 0.0;
  double decay = 0.0;  // log P / v
  double error = 0.0;  // |decay - target|
  double std_error = 0.0;  // Monte Carlo only
};

struct TailReport {
  std::vector<TailRow> rows;
  double target = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string note;
};

TailReport run_tail_decay(const BinomialTailCheck& check);

/// Large deviation LD binomial check: mean of n Bernoulli(p) above `level`.
BinomialTailCheck binomial_ld_tail(double p, double level, std::vector<double> horizons, double tolerance);
/// Moderate regime: a_n K with p_n = lambda / (n a_n), speed 1/a_n.
BinomialTailCheck binomial_md_tail(double lambda, double beta, double level, std::vector<double> horizons,
                                   double tolerance);

/// Monte Carlo estimate of P(<u, (X_1 + ... + X_n)/n> >= c) for i.i.d. X
/// from a mixture law, sampling from the exponentially tilted law.
struct TiltedTailCheck {
  MixtureLaw law;
  Vector direction;
  double level = 0.0;
  std::vector<std::uint64_t> horizons;
  std::optional<Vector> tilt;  // default s* u with <u, grad kappa(s* u)> = c
  bool use_tilt = true;
  std::size_t samples = 100000;
  double tolerance = 0.05;
};

struct TiltedTailEstimate {
  double probability = 0.0;
  double std_error = 0.0;
  std::size_t hits = 0;
};

/// One horizon: the unbiased importance-sampling estimate of the probability.
TiltedTailEstimate tilted_tail_probability(const MixtureLaw& law, const Vector& direction, double level,
                                           std::uint64_t n, const Vector& tilt, std::size_t samples,
                                           std::uint64_t seed);

/// s* u and the matching -inf{kappa^*(x) : <u, x> >= c}.
std::pair<Vector, double> half_space_tilt(const MixtureLaw& law, const Vector& direction, double level);

TailReport run_tail_decay(const TiltedTailCheck& check, std::uint64_t seed);

}  // namespace ncmd
