#pragma once

// One-parameter Mittag-Leffler function E_nu(x) = sum_k x^k / Gamma(nu k + 1)
// for 0 < nu < 1 on the real line, and its logarithm at large arguments.

#include <cstddef>
#include <stdexcept>

namespace ncmd {

struct MLParams {
  double nu = 0.5;
  double series_tol = 1e-14;
  std::size_t max_terms = 100000;
  // Above this argument log E_nu uses x^{1/nu} - log(nu) plus the algebraic
  // correction; below it the log-space series is summed.
  double asymptotic_switch = 30.0;

  void validate() const;
};

class MLConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// E_nu(x). Overflows to +inf once log E_nu(x) exceeds the double range;
/// use ml_log_eval there.
double ml_eval(const MLParams& params, double x);
double ml_eval(double nu, double x);

/// log E_nu(x), finite for every finite x.
double ml_log_eval(const MLParams& params, double x);
double ml_log_eval(double nu, double x);

/// log E_nu(x) for x >= 0 by the power series summed in log space around its
/// largest term. Throws MLConvergenceError past `max_terms`.
double ml_log_series(const MLParams& params, double x);

/// log E_nu(x) for x > 0 from the exponential asymptotic with its first
/// algebraic corrections.
double ml_log_asymptotic(double nu, double x);

/// E_nu(-s) for s > 0 from the integral representation
///   E_nu(-s) = sin(nu pi) / (pi nu s) * int_0^inf exp(-w^{1/nu}) / (1 + 2 cos(nu pi) w/s + (w/s)^2) dw,
/// which involves no cancellation.
double ml_negative_integral(double nu, double s);

}  // namespace ncmd
