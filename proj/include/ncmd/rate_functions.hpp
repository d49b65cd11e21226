#pragma once

// Limit cumulants of the scaled time-changed processes, triangular arrays and
// Gaussian moderate deviations, with the closed-form rate functions that go
// with them.

#include <optional>
#include <string>

#include "ncmd/legendre.hpp"
#include "ncmd/levy_models.hpp"

namespace ncmd {

/// f_nu(y) = y^{1/nu} for y >= 0 and 0 otherwise.
double f_nu(double y, double nu);

class LimitCumulant {
 public:
  enum class Family { ImmLd, ImmMdCentered, ImmMdDrift, LevyLd, LevyMd, PoissonLd, PoissonMd, GaussMd };

  /// f_nu(kappa_S(theta))
  static LimitCumulant imm_ld(double nu, const CumulantSpec& kappa_s);
  /// (<theta, Q theta>/2)^{1/nu}
  static LimitCumulant imm_md_centered(double nu, const Matrix& q);
  /// <theta, m>^{1/nu} on <theta, m> >= 0, else 0
  static LimitCumulant imm_md_drift(double nu, const Vector& m);
  /// Picks the centered or drift form from grad kappa_S(0). Throws when both
  /// the mean and the covariance vanish.
  static LimitCumulant imm_md(double nu, const CumulantSpec& kappa_s);
  /// kappa_V(kappa_S(theta))
  static LimitCumulant levy_ld(const SubordinatorModel& clock, const CumulantSpec& kappa_s);
  /// kappa_V'(0) kappa_S(theta)
  static LimitCumulant levy_md(double kv_prime, const CumulantSpec& kappa_s);
  /// log(1 + p (G(theta) - 1))
  static LimitCumulant poisson_ld(double p, const MixtureLaw& jumps);
  /// lambda (G(theta) - 1)
  static LimitCumulant poisson_md(double lambda, const MixtureLaw& jumps);
  /// <theta, H theta>/2
  static LimitCumulant gauss_md(const Matrix& h);

  Family family() const { return family_; }
  std::size_t dim() const { return dim_; }
  double operator()(const Vector& theta) const { return eval_(theta); }
  const ScalarField& function() const { return eval_; }
  /// Gradient at the origin, the unique zero of the conjugate.
  const Vector& zero_point() const { return zero_; }
  double domain_radius() const { return radius_; }
  bool essentially_smooth() const { return smooth_; }
  std::string name() const;

  ConjugateProblem conjugate_problem(const Vector& x) const;
  /// Numerical conjugate at x.
  ConjugateResult rate(const Vector& x) const;

 private:
  LimitCumulant() = default;
  Family family_ = Family::GaussMd;
  std::size_t dim_ = 1;
  ScalarField eval_;
  Vector zero_;
  double radius_ = kInf;
  bool smooth_ = true;
};

std::string family_name(LimitCumulant::Family f);

/// (nu^{nu/(1-nu)} - nu^{1/(1-nu)}) (x/m)^{1/(1-nu)} for x/m >= 0, else +inf.
double h_nu(double x, double m, double nu);

/// ((nu/2)^{nu/(2-nu)} - (nu/2)^{2/(2-nu)}) (2 x^2 / q)^{1/(2-nu)}, nu in (0,1].
double imm_md_centered_1d(double x, double q, double nu);

struct ExplicitCase {
  enum class Tag { OppositeSign, ZeroMean, Ray, None };
  double value = kInf;  // numerical conjugate for Tag::None
  Tag tag = Tag::None;
  double c = 0.0;  // ray coefficient when tag == Ray
};

std::string tag_name(ExplicitCase::Tag tag);

/// Closed forms of the drift-driven moderate deviation rate in R^h:
/// +inf if some x_i m_i < 0, +inf if some m_i = 0 with x_i != 0, and
/// h_nu(c; 1) along the ray x = c m, c >= 0. Anything else falls back to
/// the numerical conjugate.
ExplicitCase imm_md_explicit_cases(const Vector& x, const Vector& m, double nu);

struct BinomialPoissonRates {
  double ld = kInf;  // Bernoulli(p) relative entropy
  double md = kInf;  // x log(x/p) - x + p
};

BinomialPoissonRates binomial_poisson_rates(double x, double p);

/// x log(x/lambda) - x + lambda on x >= 0, +inf otherwise.
double poisson_rate(double x, double lambda);

/// Conjugate of kappa_V(m theta), the large deviation rate of a scalar drift
/// m run on a Gamma or Poisson clock.
double subordinated_drift_rate(double x, double m, const SubordinatorModel& clock);

/// <x, H^{-1} x>/2 for positive definite H.
double gaussian_quadratic_rate(const Vector& x, const Matrix& h);

struct SkewParams {
  Matrix psi;   // (h-1) x (h-1), positive definite
  Vector delta;  // entries in (-1, 1)

  void validate() const;
  Vector a(const Vector& y) const;  // y_j / sqrt(1 - delta_j^2)
  Vector b() const;                 // delta_j / sqrt(1 - delta_j^2)
  /// Covariance of the unscaled Gaussian vector: diag(Psi, 1).
  Matrix full_covariance() const;
};

struct SkewRate {
  double value = 0.0;
  int branch = 1;        // 1: <a, Psi^{-1} b> <= 0, 2 otherwise
  double x_hat = 0.0;    // unconstrained parabola minimizer
  double minimizer = 0;  // x_h attaining the infimum over the fiber
};

SkewRate skew_md_rate(const Vector& y, const SkewParams& params);

/// (sqrt(1 - delta_j^2) x_j + delta_j |x_h|)_j
Vector skew_map(const Vector& x, const Vector& delta);
/// Point of the skew fiber over y indexed by x_h.
Vector skew_fiber_point(const Vector& y, const Vector& delta, double xh);

/// (e^{x_1}, ..., e^{x_h}, 1) / (1 + sum e^{x_j})
Vector logistic_map(const Vector& x);
/// Inverse of logistic_map on the open simplex: (log(y_j / y_{h+1}))_j.
/// Empty when y has a zero entry or is not a probability vector.
std::optional<Vector> additive_log_ratio(const Vector& y);

/// Moderate deviation rate of the logistic image of Gaussian fluctuations with
/// covariance H; +inf off the open simplex.
double logistic_md_rate(const Vector& y, const Matrix& h);
/// Large deviation rate kappa_X^*(alr(y)) for a supplied conjugate.
double logistic_ld_rate(const Vector& y, const ScalarField& kappa_conjugate);

}  // namespace ncmd
