#pragma once

// Inverse stable subordinators and the time-changed (and rescaled) Levy
// processes built from them or from ordinary subordinators.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "ncmd/levy_models.hpp"

namespace ncmd {

/// L_nu(t) = inf{s : D(s) > t} for a standard nu-stable subordinator D.
/// Marginally L_nu(t) = (t / D(1))^nu.
class InverseStableModel {
 public:
  explicit InverseStableModel(double nu);

  double nu() const { return nu_; }
  double sample(double t, Engine& rng) const;
  /// E L_nu(t) = t^nu / Gamma(nu + 1).
  double mean(double t) const;
  std::string describe() const;

 private:
  double nu_;
};

/// Normalization family a_t: the unit constant, t^{-beta} with beta in (0,1),
/// or 1/t. Only the power family has a_t -> 0 and t a_t -> inf.
struct ScalingRegime {
  enum class Family { Unit, Power, Inverse };

  Family family = Family::Unit;
  double beta = 0.0;
  /// Exponent on (a_t t) for inverse-stable clocks; derived from the driver
  /// when absent.
  std::optional<double> alpha;

  static ScalingRegime unit() { return {}; }
  static ScalingRegime power(double beta);
  static ScalingRegime inverse() { return {Family::Inverse, 1.0, std::nullopt}; }

  double a(double t) const;
  bool moderate() const { return family == Family::Power; }
  std::string describe() const;
};

/// 1 - nu/2 for a driver with zero mean, 1 - nu otherwise.
double alpha_exponent(double nu, bool driftless);

using Clock = std::variant<InverseStableModel, SubordinatorModel>;

SampleBatch sample_inverse_stable(const InverseStableModel& model, double t, std::size_t n, std::uint64_t seed);

/// Draws of the scaled time-changed vector selected by the clock:
///   inverse stable:  (a_t t)^alpha S(L_nu(t)) / t
///   subordinator:    a_t S(V(t) / (t a_t))
/// Clock and driver consume independent streams.
SampleBatch sample_time_changed(const LevyModel& levy, const Clock& clock, double t, const ScalingRegime& scaling,
                                std::size_t n, std::uint64_t seed);

}  // namespace ncmd
