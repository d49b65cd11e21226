#pragma once

// Numerical convex conjugate Lambda*(x) = sup_theta {<theta, x> - Lambda(theta)}
// and fiber infima inf{I(x) : U(x) = y}.

#include <cstdint>
#include <functional>
#include <stdexcept>

#include "ncmd/rng.hpp"

namespace ncmd {

using ScalarField = std::function<double(const Vector&)>;
using VectorField = std::function<Vector(const Vector&)>;

struct ConjugateProblem {
  ScalarField lambda;  // convex, lambda(0) = 0, +inf off its domain
  Vector x;
  double domain_radius = kInf;
  double solver_tol = 1e-9;
  double infinity_threshold = 1e12;
  VectorField gradient;                          // optional; central differences otherwise
  std::function<Matrix(const Vector&)> hessian;  // optional; switches to damped Newton
  unsigned restarts = 8;
  std::uint64_t seed = 0x1e6e4d2e;
  bool essentially_smooth = true;  // recorded, never checked
};

struct ConjugateResult {
  double value = 0.0;  // +inf when the supremum diverges
  Vector argmax;       // empty when value is +inf
  bool converged = false;
  double gradient_residual = kInf;  // |x - grad Lambda(argmax)|
  std::size_t evaluations = 0;
  bool essentially_smooth = true;

  bool finite() const { return value < kInf; }
};

class NonConvexityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Supremum over theta in R^h, h <= 6. Starts from 0 plus `restarts` random
/// points and keeps the largest value found.
ConjugateResult conjugate(const ConjugateProblem& problem);

/// Central-difference gradient that falls back to one-sided differences next
/// to points where f is +inf.
Vector numerical_gradient(const ScalarField& f, const Vector& theta);

struct ContractionProblem {
  ScalarField inner_rate;
  VectorField map;  // U : R^h -> R^k
  Vector y;
  std::size_t h = 0;
  /// Optional explicit fiber: R^fiber_dim -> points x with U(x) = y.
  VectorField parametrization;
  std::size_t fiber_dim = 0;
  double box = 10.0;          // fiber parameters searched in [-box, box]
  double resolution = 1e-4;   // 2-D fibers: coarse grid spacing relative to the box width
};

struct ContractionResult {
  double value = kInf;
  Vector argmin;  // point of the fiber attaining value; empty if none found
  std::size_t fiber_points = 0;
};

/// Without a parametrization the last h - k coordinates of x are free (at
/// most two) and the remaining ones are solved from U(x) = y.
ContractionResult contract(const ContractionProblem& problem);

}  // namespace ncmd
