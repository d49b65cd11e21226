#pragma once

// Cumulant generating functions and exact fixed-time samplers for the driving
// processes: multivariate Levy processes S, scalar subordinators V, and the
// zero-inflated summands of triangular arrays.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ncmd/rng.hpp"

namespace ncmd {

/// kappa(theta) = log E exp(<theta, X>) together with its first two
/// derivatives at the origin.
///
/// `eval` returns +inf wherever the MGF is infinite; it is never extrapolated.
/// `domain_radius` is the radius of an open ball around 0 on which kappa is
/// guaranteed finite (it may be finite on a larger, non-ball set).
struct CumulantSpec {
  std::size_t dim = 1;
  std::function<double(const Vector&)> eval;
  Vector grad0;
  Matrix hess0;
  double domain_radius = kInf;
  bool essentially_smooth = true;

  double operator()(const Vector& theta) const { return eval(theta); }
  double operator()(double theta) const;  // dim == 1 convenience
};

/// One component of a jump/summand law: a point mass when `cov` is zero,
/// otherwise a Gaussian.
struct MixtureComponent {
  double weight = 1.0;
  Vector mean;
  Matrix cov;
};

/// Finite mixture of point masses and Gaussians. Its MGF is available in
/// closed form, and exponential tilting keeps it inside the same class.
class MixtureLaw {
 public:
  explicit MixtureLaw(std::vector<MixtureComponent> components);

  static MixtureLaw point_mass(const Vector& at);
  static MixtureLaw gaussian(const Vector& mean, const Matrix& cov);
  /// i.i.d. +-1 coordinates, written as 2^dim equally weighted atoms.
  static MixtureLaw rademacher(std::size_t dim);

  std::size_t dim() const { return dim_; }
  const std::vector<MixtureComponent>& components() const { return components_; }

  double mgf(const Vector& theta) const;
  double log_mgf(const Vector& theta) const;  // overflow-safe
  Vector mean() const;
  Matrix second_moment() const;
  Matrix covariance() const;
  CumulantSpec cumulant() const;

  /// Law with density proportional to exp(<theta, x>) relative to this one.
  MixtureLaw tilted(const Vector& theta) const;

  bool has_atom_at_zero() const;
  bool is_single_unit_atom() const;  // h = 1, all mass at x = 1 (G = e^theta)

  Vector sample(Engine& rng) const;
  /// Sum of `count` independent draws, via multinomial component counts.
  Vector sample_sum(std::uint64_t count, Engine& rng) const;

  std::string describe() const;

 private:
  std::size_t dim_ = 0;
  std::vector<MixtureComponent> components_;
  std::vector<Matrix> factors_;  // factors_[k] * factors_[k]^T == cov_k
  std::vector<bool> is_atom_;
};

/// R^h-valued Levy process with a fixed-time marginal sampler.
class LevyModel {
 public:
  enum class Kind { BrownianWithDrift, CompoundPoisson, DeterministicDrift };

  static LevyModel brownian(const Vector& drift, const Matrix& cov);
  static LevyModel compound_poisson(double rate, MixtureLaw jumps);
  static LevyModel drift(const Vector& velocity);

  Kind kind() const { return kind_; }
  std::size_t dim() const { return cumulant_.dim; }
  const CumulantSpec& cumulant() const { return cumulant_; }
  /// Mean of S(1) and covariance of S(1).
  const Vector& mean() const { return cumulant_.grad0; }
  const Matrix& covariance() const { return cumulant_.hess0; }
  bool driftless() const;

  const Vector& drift_vector() const { return drift_; }
  const Matrix& diffusion() const { return cov_; }
  double jump_rate() const { return rate_; }
  const MixtureLaw* jumps() const { return jumps_.get(); }

  /// One draw of S(t); S(0) = 0.
  Vector sample(double t, Engine& rng) const;
  std::string describe() const;

 private:
  LevyModel() = default;
  Kind kind_ = Kind::DeterministicDrift;
  CumulantSpec cumulant_;
  Vector drift_;
  Matrix cov_;
  Matrix factor_;
  double rate_ = 0.0;
  std::shared_ptr<const MixtureLaw> jumps_;
};

/// Nondecreasing scalar Levy process used as a random clock.
class SubordinatorModel {
 public:
  enum class Kind { Gamma, Poisson, StableDriftFree };

  static SubordinatorModel gamma(double shape, double rate);
  static SubordinatorModel poisson(double rate);
  /// nu-stable subordinator, E exp(-s V(1)) = exp(-s^nu); sampling only,
  /// kappa is +inf for eta > 0 and the mean rate is infinite.
  static SubordinatorModel stable(double nu);

  Kind kind() const { return kind_; }
  const CumulantSpec& cumulant() const { return cumulant_; }
  double kappa(double eta) const { return cumulant_(eta); }
  /// kappa_V'(0) = E V(1).
  double mean_rate() const { return mean_rate_; }
  double shape() const { return a_; }
  double rate() const { return b_; }
  double stable_index() const { return a_; }

  double sample(double t, Engine& rng) const;
  std::string describe() const;

 private:
  SubordinatorModel() = default;
  Kind kind_ = Kind::Poisson;
  CumulantSpec cumulant_;
  double mean_rate_ = 0.0;
  double a_ = 0.0;
  double b_ = 0.0;
};

/// X(p): zero with probability 1 - p, otherwise a draw from `jumps`, so
/// E exp(<theta, X>) = 1 - p + p G(theta).
class TriangularSummandModel {
 public:
  TriangularSummandModel(MixtureLaw jumps, double p);

  const MixtureLaw& jumps() const { return jumps_; }
  double p() const { return p_; }
  std::size_t dim() const { return jumps_.dim(); }
  double jump_mgf(const Vector& theta) const { return jumps_.mgf(theta); }
  Vector jump_mean() const { return jumps_.mean(); }

  Vector sample(Engine& rng) const;
  /// X_1(p) + ... + X_n(p) drawn as a Binomial(n, p) count of jumps.
  Vector sample_sum(std::uint64_t n, Engine& rng) const;

 private:
  MixtureLaw jumps_;
  double p_;
};

/// 1 - p + p G(theta); +inf iff G(theta) = +inf (and p > 0).
double mgf_of_summand(const TriangularSummandModel& model, const Vector& theta);

SampleBatch sample_batch(const LevyModel& model, double t, std::size_t n, std::uint64_t seed);
SampleBatch sample_batch(const SubordinatorModel& model, double t, std::size_t n, std::uint64_t seed);

/// Positive nu-stable draw with E exp(-s S) = exp(-s^nu), by the
/// Chambers-Mallows-Stuck (Kanter) construction.
double sample_positive_stable(double nu, Engine& rng);

}  // namespace ncmd
