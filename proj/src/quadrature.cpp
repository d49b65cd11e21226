#include "ncmd/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/exp_sinh.hpp>

namespace ncmd {

GaussHermiteRule gauss_hermite(std::size_t n) {
  if (n == 0) throw std::invalid_argument("gauss_hermite: n must be positive");
  const auto m = static_cast<Eigen::Index>(n);
  Matrix jacobi = Matrix::Zero(m, m);
  for (Eigen::Index k = 1; k < m; ++k) jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Matrix> es(jacobi);
  GaussHermiteRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (Eigen::Index k = 0; k < m; ++k) {
    rule.nodes[static_cast<std::size_t>(k)] = es.eigenvalues()(k);
    const double v = es.eigenvectors()(0, k);
    rule.weights[static_cast<std::size_t>(k)] = v * v;
  }
  return rule;
}

double gaussian_expectation(const std::function<double(const Vector&)>& f, const Vector& mean, const Matrix& cov,
                            std::size_t nodes) {
  const auto d = mean.size();
  if (cov.rows() != d || cov.cols() != d) throw std::invalid_argument("gaussian_expectation: covariance size mismatch");
  if (d > 4) throw std::invalid_argument("gaussian_expectation: tensor rule limited to dimension 4");
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()))
    throw std::invalid_argument("gaussian_expectation: covariance is not positive semidefinite");
  const Matrix factor = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  const GaussHermiteRule rule = gauss_hermite(nodes);

  std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
  double total = 0.0;
  Vector z(d);
  while (true) {
    double w = 1.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      z(j) = rule.nodes[idx[static_cast<std::size_t>(j)]];
      w *= rule.weights[idx[static_cast<std::size_t>(j)]];
    }
    total += w * f(mean + factor * z);
    std::size_t j = 0;
    while (j < idx.size() && ++idx[j] == nodes) idx[j++] = 0;
    if (j == idx.size()) break;
  }
  return total;
}

double abs_normal_mgf(double s) {
  if (!std::isfinite(s)) throw std::invalid_argument("abs_normal_mgf: s must be finite");
  boost::math::quadrature::exp_sinh<double> integrator;
  const double norm = std::sqrt(2.0 / std::numbers::pi);
  auto density = [s, norm](double z) { return norm * std::exp(s * z - 0.5 * z * z); };
  return integrator.integrate(density, 0.0, std::numeric_limits<double>::infinity(), 1e-14);
}

double abs_normal_mgf_closed(double s) { return std::exp(0.5 * s * s) * std::erfc(-s / std::numbers::sqrt2); }

double normal_upper_tail(double c) {
  if (!std::isfinite(c)) throw std::invalid_argument("normal_upper_tail: c must be finite");
  boost::math::quadrature::exp_sinh<double> integrator;
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  auto density = [c, norm](double u) {
    const double z = c + u;
    return norm * std::exp(-0.5 * z * z);
  };
  return integrator.integrate(density, 0.0, std::numeric_limits<double>::infinity(), 1e-14);
}

}  // namespace ncmd
