#include "ncmd/mittag_leffler.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/quadrature/tanh_sinh.hpp>

namespace ncmd {

namespace {

// Neumaier-compensated accumulator in extended precision.
struct CompensatedSum {
  long double sum = 0.0L;
  long double comp = 0.0L;
  void add(long double v) {
    const long double t = sum + v;
    if (std::fabs(sum) >= std::fabs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }
  long double value() const { return sum + comp; }
};

// Alternating series is only trusted while the largest term stays within a
// few e-folds of the result; beyond that the integral form takes over.
constexpr double kNegativeSeriesLimit = 8.0;

// exp(-w^{1/nu}) is below 1e-340 past w = 800^nu.
double negative_integral_cutoff(double nu) { return std::pow(800.0, nu); }

double reciprocal_gamma(double z) {
  if (z <= 0.0 && z == std::floor(z)) return 0.0;
  return 1.0 / std::tgamma(z);
}

double negative_series(const MLParams& p, double x) {
  const long double nu = p.nu;
  const long double lx = std::log(std::fabs(static_cast<long double>(x)));
  CompensatedSum acc;
  acc.add(1.0L);
  long double prev_mag = 1.0L;
  for (std::size_t k = 1; k < p.max_terms; ++k) {
    const long double mag = std::exp(static_cast<long double>(k) * lx - std::lgamma(nu * k + 1.0L));
    acc.add(k % 2 == 1 ? -mag : mag);
    if (mag < prev_mag && mag <= p.series_tol * 1e-3L * std::fabs(acc.value())) return static_cast<double>(acc.value());
    prev_mag = mag;
  }
  throw MLConvergenceError("ml_eval: series did not converge within max_terms (x = " + std::to_string(x) + ")");
}

}  // namespace

void MLParams::validate() const {
  if (!(nu > 0.0 && nu < 1.0)) throw std::invalid_argument("Mittag-Leffler: nu must lie in (0,1)");
  if (!(series_tol > 0.0)) throw std::invalid_argument("Mittag-Leffler: series_tol must be positive");
  if (max_terms < 2) throw std::invalid_argument("Mittag-Leffler: max_terms must be at least 2");
  if (!(asymptotic_switch > 0.0)) throw std::invalid_argument("Mittag-Leffler: asymptotic_switch must be positive");
}

double ml_log_series(const MLParams& p, double x) {
  p.validate();
  if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("ml_log_series: x must be finite and >= 0");
  if (x == 0.0) return 0.0;

  const long double nu = p.nu;
  const long double lx = std::log(static_cast<long double>(x));
  auto ell = [&](std::size_t k) { return static_cast<long double>(k) * lx - std::lgamma(nu * k + 1.0L); };

  // The log-terms are concave in k, so the terms are unimodal: locate the
  // peak, then sum outward in both directions.
  const long double guess = (std::pow(static_cast<long double>(x), 1.0L / nu) - 0.5L) / nu;
  if (guess > 1e15L) throw MLConvergenceError("ml_log_series: argument too large for series summation");
  std::size_t k = guess > 0.0L ? static_cast<std::size_t>(guess) : 0;
  while (ell(k + 1) > ell(k)) ++k;
  while (k > 0 && ell(k - 1) > ell(k)) --k;
  const long double peak = ell(k);

  CompensatedSum acc;
  acc.add(1.0L);
  std::size_t terms = 1;
  const long double tol = p.series_tol * 1e-2L;

  long double prev = peak;
  for (std::size_t j = k + 1;; ++j) {
    const long double l = ell(j);
    const long double term = std::exp(l - peak);
    const long double ratio = std::exp(l - prev);
    acc.add(term);
    if (++terms > p.max_terms) throw MLConvergenceError("ml_log_series: max_terms reached before series_tol");
    if (ratio < 1.0L && term / (1.0L - ratio) < tol * acc.value()) break;
    prev = l;
  }
  prev = peak;
  for (std::size_t j = k; j-- > 0;) {
    const long double l = ell(j);
    const long double term = std::exp(l - peak);
    const long double ratio = std::exp(l - prev);
    acc.add(term);
    if (++terms > p.max_terms) throw MLConvergenceError("ml_log_series: max_terms reached before series_tol");
    if (ratio < 1.0L && term / (1.0L - ratio) < tol * acc.value()) break;
    prev = l;
  }
  return static_cast<double>(peak + std::log(acc.value()));
}

double ml_log_asymptotic(double nu, double x) {
  if (!(x > 0.0)) throw std::invalid_argument("ml_log_asymptotic: x must be positive");
  const double lead = std::pow(x, 1.0 / nu);
  double correction = 0.0;
  double xk = 1.0;
  for (int k = 1; k <= 3; ++k) {
    xk /= x;
    correction += xk * reciprocal_gamma(1.0 - nu * k);
  }
  // E = e^{lead}/nu - correction + O(x^{-4})
  return lead - std::log(nu) + std::log1p(-nu * std::exp(-lead) * correction);
}

double ml_negative_integral(double nu, double s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("ml_negative_integral: s must be positive");
  const double c = std::cos(nu * std::numbers::pi);
  const double inv_nu = 1.0 / nu;
  auto f = [s, c, inv_nu](double w) {
    const double r = w / s;
    return std::exp(-std::pow(w, inv_nu)) / (1.0 + r * (2.0 * c + r));
  };
  boost::math::quadrature::tanh_sinh<double> integrator;
  const double tol = 1e-15;
  const double upper = negative_integral_cutoff(nu);
  double integral = 0.0;
  if (c < 0.0 && s < upper) {
    // the denominator dips to sin^2(nu pi) at w = s
    integral = integrator.integrate(f, 0.0, s, tol) + integrator.integrate(f, s, upper, tol);
  } else {
    integral = integrator.integrate(f, 0.0, upper, tol);
  }
  return std::sin(nu * std::numbers::pi) / (std::numbers::pi * nu * s) * integral;
}

double ml_eval(const MLParams& p, double x) {
  p.validate();
  if (!std::isfinite(x)) throw std::invalid_argument("ml_eval: x must be finite");
  if (x == 0.0) return 1.0;
  if (x > 0.0) {
    if (std::pow(x, 1.0 / p.nu) - std::log(p.nu) > std::log(std::numeric_limits<double>::max()) + 1.0) return std::numeric_limits<double>::infinity();
    return std::exp(ml_log_series(p, x));
  }
  const double s = -x;
  if (std::pow(s, 1.0 / p.nu) <= kNegativeSeriesLimit) return negative_series(p, x);
  return ml_negative_integral(p.nu, s);
}

double ml_eval(double nu, double x) { return ml_eval(MLParams{.nu = nu}, x); }

double ml_log_eval(const MLParams& p, double x) {
  p.validate();
  if (!std::isfinite(x)) throw std::invalid_argument("ml_log_eval: x must be finite");
  if (x == 0.0) return 0.0;
  if (x < 0.0) return std::log(ml_eval(p, x));
  // Past x^{1/nu} = 745 the exponentially small gap between series and
  // asymptotic is below double resolution, so the regimes coincide.
  if (x > p.asymptotic_switch || std::pow(x, 1.0 / p.nu) > 745.0) return ml_log_asymptotic(p.nu, x);
  return ml_log_series(p, x);
}

double ml_log_eval(double nu, double x) { return ml_log_eval(MLParams{.nu = nu}, x); }

}  // namespace ncmd
