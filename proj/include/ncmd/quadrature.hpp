#pragma once

// Gaussian expectations used as weak-convergence targets.

#include <cstddef>
#include <functional>
#include <vector>

#include "ncmd/rng.hpp"

namespace ncmd {

/// Nodes and weights for E f(Z), Z ~ N(0,1) (probabilists' Hermite weight),
/// by the Golub-Welsch eigenvalue method.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // sum to 1
};

GaussHermiteRule gauss_hermite(std::size_t n);

/// E f(mean + L Z) for Z standard normal in R^d with L L^T = cov, on the
/// tensor-product rule with `nodes` points per axis.
double gaussian_expectation(const std::function<double(const Vector&)>& f, const Vector& mean, const Matrix& cov,
                            std::size_t nodes);

/// E exp(s |Z|) by exp-sinh quadrature of the half-normal density.
double abs_normal_mgf(double s);
/// 2 exp(s^2/2) Phi(s).
double abs_normal_mgf_closed(double s);

/// P(Z >= c) for standard normal Z by quadrature of the density.
double normal_upper_tail(double c);

}  // namespace ncmd
