#include "ncmd/rate_functions.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ncmd {

namespace {

void require_nu(double nu, const char* who) {
  if (!(nu > 0.0 && nu < 1.0)) throw std::invalid_argument(std::string(who) + ": nu must lie in (0,1)");
}

Matrix checked_inverse(const Matrix& h, const char* who) {
  if (h.rows() != h.cols() || h.rows() == 0) throw std::invalid_argument(std::string(who) + ": matrix must be square");
  Eigen::LLT<Matrix> llt(h);
  if (llt.info() != Eigen::Success) throw std::invalid_argument(std::string(who) + ": matrix must be positive definite");
  return llt.solve(Matrix::Identity(h.rows(), h.cols()));
}

double xlogx_ratio(double x, double p) { return x == 0.0 ? 0.0 : x * std::log(x / p); }

}  // namespace

double f_nu(double y, double nu) {
  if (y == kInf) return kInf;
  return y >= 0.0 ? std::pow(y, 1.0 / nu) : 0.0;
}

// ---------------------------------------------------------------------------
// LimitCumulant

LimitCumulant LimitCumulant::imm_ld(double nu, const CumulantSpec& kappa_s) {
  require_nu(nu, "LimitCumulant::imm_ld");
  LimitCumulant lc;
  lc.family_ = Family::ImmLd;
  lc.dim_ = kappa_s.dim;
  lc.eval_ = [nu, k = kappa_s.eval](const Vector& th) { return f_nu(k(th), nu); };
  lc.zero_ = Vector::Zero(static_cast<Eigen::Index>(lc.dim_));
  lc.radius_ = kappa_s.domain_radius;
  lc.smooth_ = kappa_s.essentially_smooth;
  return lc;
}

LimitCumulant LimitCumulant::imm_md_centered(double nu, const Matrix& q) {
  require_nu(nu, "LimitCumulant::imm_md_centered");
  if (q.rows() != q.cols() || q.rows() == 0) throw std::invalid_argument("imm_md_centered: Q must be square");
  if (q.isZero(0.0)) throw std::invalid_argument("imm_md_centered: Q must not be the null matrix");
  LimitCumulant lc;
  lc.family_ = Family::ImmMdCentered;
  lc.dim_ = static_cast<std::size_t>(q.rows());
  lc.eval_ = [nu, q](const Vector& th) { return std::pow(std::max(0.0, 0.5 * th.dot(q * th)), 1.0 / nu); };
  lc.zero_ = Vector::Zero(q.rows());
  return lc;
}

LimitCumulant LimitCumulant::imm_md_drift(double nu, const Vector& m) {
  require_nu(nu, "LimitCumulant::imm_md_drift");
  if (m.size() == 0 || m.isZero(0.0)) throw std::invalid_argument("imm_md_drift: m must be nonzero");
  LimitCumulant lc;
  lc.family_ = Family::ImmMdDrift;
  lc.dim_ = static_cast<std::size_t>(m.size());
  lc.eval_ = [nu, m](const Vector& th) { return f_nu(th.dot(m), nu); };
  lc.zero_ = Vector::Zero(m.size());
  return lc;
}

LimitCumulant LimitCumulant::imm_md(double nu, const CumulantSpec& kappa_s) {
  if (!kappa_s.grad0.isZero(0.0)) return imm_md_drift(nu, kappa_s.grad0);
  if (kappa_s.hess0.isZero(0.0))
    throw std::invalid_argument("imm_md: the driver has zero mean and zero covariance, no rate function is defined");
  return imm_md_centered(nu, kappa_s.hess0);
}

LimitCumulant LimitCumulant::levy_ld(const SubordinatorModel& clock, const CumulantSpec& kappa_s) {
  if (clock.kind() == SubordinatorModel::Kind::StableDriftFree)
    throw std::invalid_argument("levy_ld: the clock needs a finite mean rate");
  LimitCumulant lc;
  lc.family_ = Family::LevyLd;
  lc.dim_ = kappa_s.dim;
  lc.eval_ = [kv = clock.cumulant().eval, ks = kappa_s.eval](const Vector& th) {
    const double inner = ks(th);
    if (inner == kInf) return kInf;
    return kv(Vector::Constant(1, inner));
  };
  lc.zero_ = clock.mean_rate() * kappa_s.grad0;
  lc.radius_ = kappa_s.domain_radius;
  lc.smooth_ = kappa_s.essentially_smooth && clock.cumulant().essentially_smooth;
  return lc;
}

LimitCumulant LimitCumulant::levy_md(double kv_prime, const CumulantSpec& kappa_s) {
  if (!(kv_prime > 0.0) || !std::isfinite(kv_prime)) throw std::invalid_argument("levy_md: kappa_V'(0) must be positive");
  LimitCumulant lc;
  lc.family_ = Family::LevyMd;
  lc.dim_ = kappa_s.dim;
  lc.eval_ = [kv_prime, ks = kappa_s.eval](const Vector& th) {
    const double inner = ks(th);
    return inner == kInf ? kInf : kv_prime * inner;
  };
  lc.zero_ = kv_prime * kappa_s.grad0;
  lc.radius_ = kappa_s.domain_radius;
  lc.smooth_ = kappa_s.essentially_smooth;
  return lc;
}

LimitCumulant LimitCumulant::poisson_ld(double p, const MixtureLaw& jumps) {
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("poisson_ld: p must lie in (0,1]");
  LimitCumulant lc;
  lc.family_ = Family::PoissonLd;
  lc.dim_ = jumps.dim();
  lc.eval_ = [p, jumps](const Vector& th) {
    const double lg = jumps.log_mgf(th);
    if (lg == kInf) return kInf;
    if (lg <= 0.0) return std::log1p(p * std::expm1(lg));
    return lg + std::log(p + (1.0 - p) * std::exp(-lg));
  };
  lc.zero_ = p * jumps.mean();
  return lc;
}

LimitCumulant LimitCumulant::poisson_md(double lambda, const MixtureLaw& jumps) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("poisson_md: lambda must be positive");
  LimitCumulant lc;
  lc.family_ = Family::PoissonMd;
  lc.dim_ = jumps.dim();
  lc.eval_ = [lambda, jumps](const Vector& th) {
    const double lg = jumps.log_mgf(th);
    if (lg == kInf) return kInf;
    return lambda * std::expm1(lg);
  };
  lc.zero_ = lambda * jumps.mean();
  return lc;
}

LimitCumulant LimitCumulant::gauss_md(const Matrix& h) {
  if (h.rows() != h.cols() || h.rows() == 0) throw std::invalid_argument("gauss_md: H must be square");
  LimitCumulant lc;
  lc.family_ = Family::GaussMd;
  lc.dim_ = static_cast<std::size_t>(h.rows());
  lc.eval_ = [h](const Vector& th) { return 0.5 * th.dot(h * th); };
  lc.zero_ = Vector::Zero(h.rows());
  return lc;
}

std::string family_name(LimitCumulant::Family f) {
  switch (f) {
    case LimitCumulant::Family::ImmLd: return "IMM_LD";
    case LimitCumulant::Family::ImmMdCentered: return "IMM_MD_centered";
    case LimitCumulant::Family::ImmMdDrift: return "IMM_MD_drift";
    case LimitCumulant::Family::LevyLd: return "LEVY_LD";
    case LimitCumulant::Family::LevyMd: return "LEVY_MD";
    case LimitCumulant::Family::PoissonLd: return "POISSON_LD";
    case LimitCumulant::Family::PoissonMd: return "POISSON_MD";
    case LimitCumulant::Family::GaussMd: return "GAUSS_MD";
  }
  return "unknown";
}

std::string LimitCumulant::name() const { return family_name(family_); }

ConjugateProblem LimitCumulant::conjugate_problem(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != dim_) throw std::invalid_argument("LimitCumulant: dimension mismatch");
  ConjugateProblem p;
  p.lambda = eval_;
  p.x = x;
  p.domain_radius = radius_;
  p.essentially_smooth = smooth_;
  return p;
}

ConjugateResult LimitCumulant::rate(const Vector& x) const { return conjugate(conjugate_problem(x)); }

// ---------------------------------------------------------------------------
// Closed forms

double h_nu(double x, double m, double nu) {
  require_nu(nu, "h_nu");
  if (m == 0.0) throw std::invalid_argument("h_nu: m must be nonzero");
  const double r = x / m;
  if (r < 0.0) return kInf;
  const double c = std::pow(nu, nu / (1.0 - nu)) - std::pow(nu, 1.0 / (1.0 - nu));
  return c * std::pow(r, 1.0 / (1.0 - nu));
}

double imm_md_centered_1d(double x, double q, double nu) {
  if (!(nu > 0.0 && nu <= 1.0)) throw std::invalid_argument("imm_md_centered_1d: nu must lie in (0,1]");
  if (!(q > 0.0)) throw std::invalid_argument("imm_md_centered_1d: q must be positive");
  const double half = nu / 2.0;
  const double c = std::pow(half, nu / (2.0 - nu)) - std::pow(half, 2.0 / (2.0 - nu));
  return c * std::pow(2.0 * x * x / q, 1.0 / (2.0 - nu));
}

std::string tag_name(ExplicitCase::Tag tag) {
  switch (tag) {
    case ExplicitCase::Tag::OppositeSign: return "opposite-sign";
    case ExplicitCase::Tag::ZeroMean: return "zero-mean";
    case ExplicitCase::Tag::Ray: return "ray";
    case ExplicitCase::Tag::None: return "none";
  }
  return "none";
}

ExplicitCase imm_md_explicit_cases(const Vector& x, const Vector& m, double nu) {
  require_nu(nu, "imm_md_explicit_cases");
  if (x.size() != m.size()) throw std::invalid_argument("imm_md_explicit_cases: dimension mismatch");
  if (m.isZero(0.0)) throw std::invalid_argument("imm_md_explicit_cases: m must be nonzero");
  ExplicitCase out;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x(i) * m(i) < -1e-12) {
      out.tag = ExplicitCase::Tag::OppositeSign;
      return out;
    }
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (m(i) == 0.0 && std::fabs(x(i)) > 1e-12) {
      out.tag = ExplicitCase::Tag::ZeroMean;
      return out;
    }
  }
  const double c = x.dot(m) / m.squaredNorm();
  if (c >= 0.0 && (x - c * m).norm() <= 1e-9 * m.norm()) {
    out.tag = ExplicitCase::Tag::Ray;
    out.c = c;
    out.value = h_nu(c, 1.0, nu);
    return out;
  }
  out.tag = ExplicitCase::Tag::None;
  out.value = LimitCumulant::imm_md_drift(nu, m).rate(x).value;
  return out;
}

double poisson_rate(double x, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("poisson_rate: lambda must be positive");
  if (x < 0.0) return kInf;
  return xlogx_ratio(x, lambda) - x + lambda;
}

BinomialPoissonRates binomial_poisson_rates(double x, double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("binomial_poisson_rates: p must lie in (0,1)");
  BinomialPoissonRates r;
  if (x >= 0.0 && x <= 1.0) r.ld = xlogx_ratio(x, p) + xlogx_ratio(1.0 - x, 1.0 - p);
  r.md = poisson_rate(x, p);
  return r;
}

double subordinated_drift_rate(double x, double m, const SubordinatorModel& clock) {
  if (m == 0.0) throw std::invalid_argument("subordinated_drift_rate: m must be nonzero");
  const double y = x / m;
  switch (clock.kind()) {
    case SubordinatorModel::Kind::Gamma: {
      const double a = clock.shape(), b = clock.rate();
      if (!(y > 0.0)) return kInf;
      return b * y - a - a * std::log(b * y / a);
    }
    case SubordinatorModel::Kind::Poisson:
      return poisson_rate(y, clock.rate());
    case SubordinatorModel::Kind::StableDriftFree:
      break;
  }
  throw std::invalid_argument("subordinated_drift_rate: needs a Gamma or Poisson clock");
}

double gaussian_quadratic_rate(const Vector& x, const Matrix& h) {
  if (x.size() != h.rows()) throw std::invalid_argument("gaussian_quadratic_rate: dimension mismatch");
  Eigen::LLT<Matrix> llt(h);
  if (h.rows() != h.cols() || llt.info() != Eigen::Success)
    throw std::invalid_argument("gaussian_quadratic_rate: H must be positive definite");
  return 0.5 * x.dot(llt.solve(x));
}

// ---------------------------------------------------------------------------
// Skew normal example

void SkewParams::validate() const {
  if (delta.size() == 0) throw std::invalid_argument("SkewParams: delta must be nonempty");
  if (psi.rows() != delta.size() || psi.cols() != delta.size())
    throw std::invalid_argument("SkewParams: Psi must be (h-1)x(h-1)");
  for (double d : delta)
    if (!(d > -1.0 && d < 1.0)) throw std::invalid_argument("SkewParams: delta entries must lie in (-1,1)");
  if (!psi.isApprox(psi.transpose(), 1e-12)) throw std::invalid_argument("SkewParams: Psi must be symmetric");
  checked_inverse(psi, "SkewParams");
}

Vector SkewParams::a(const Vector& y) const {
  return (y.array() / (1.0 - delta.array().square()).sqrt()).matrix();
}

Vector SkewParams::b() const { return (delta.array() / (1.0 - delta.array().square()).sqrt()).matrix(); }

Matrix SkewParams::full_covariance() const {
  const auto k = psi.rows();
  Matrix h = Matrix::Zero(k + 1, k + 1);
  h.topLeftCorner(k, k) = psi;
  h(k, k) = 1.0;
  return h;
}

SkewRate skew_md_rate(const Vector& y, const SkewParams& params) {
  params.validate();
  if (y.size() != params.delta.size()) throw std::invalid_argument("skew_md_rate: y has the wrong dimension");
  const Matrix inv = checked_inverse(params.psi, "skew_md_rate");
  const Vector a = params.a(y), b = params.b();
  const double aa = a.dot(inv * a), ab = a.dot(inv * b), bb = b.dot(inv * b);
  SkewRate r;
  r.x_hat = ab / (bb + 1.0);
  if (ab <= 0.0) {
    r.branch = 1;
    r.value = 0.5 * aa;
    r.minimizer = 0.0;
  } else {
    r.branch = 2;
    r.value = 0.5 * (aa - ab * ab / (bb + 1.0));
    r.minimizer = r.x_hat;
  }
  return r;
}

Vector skew_map(const Vector& x, const Vector& delta) {
  const auto k = delta.size();
  if (x.size() != k + 1) throw std::invalid_argument("skew_map: x must have dimension h = len(delta) + 1");
  const double abs_last = std::fabs(x(k));
  return ((1.0 - delta.array().square()).sqrt() * x.head(k).array() + delta.array() * abs_last).matrix();
}

Vector skew_fiber_point(const Vector& y, const Vector& delta, double xh) {
  const auto k = delta.size();
  Vector x(k + 1);
  x.head(k) = ((y.array() - std::fabs(xh) * delta.array()) / (1.0 - delta.array().square()).sqrt()).matrix();
  x(k) = xh;
  return x;
}

// ---------------------------------------------------------------------------
// Logistic normal example

Vector logistic_map(const Vector& x) {
  const auto h = x.size();
  // shift by the largest exponent (including the implicit 0) for stability
  const double shift = std::max(0.0, h > 0 ? x.maxCoeff() : 0.0);
  Vector y(h + 1);
  double total = std::exp(-shift);
  for (Eigen::Index j = 0; j < h; ++j) {
    y(j) = std::exp(x(j) - shift);
    total += y(j);
  }
  y(h) = std::exp(-shift);
  return y / total;
}

std::optional<Vector> additive_log_ratio(const Vector& y) {
  if (y.size() < 2) return std::nullopt;
  if ((y.array() <= 0.0).any() || !y.allFinite()) return std::nullopt;
  if (std::fabs(y.sum() - 1.0) > 1e-12) return std::nullopt;
  const auto h = y.size() - 1;
  return (y.head(h).array() / y(h)).log().matrix().eval();
}

double logistic_md_rate(const Vector& y, const Matrix& h) {
  auto x = additive_log_ratio(y);
  if (!x) return kInf;
  return gaussian_quadratic_rate(*x, h);
}

double logistic_ld_rate(const Vector& y, const ScalarField& kappa_conjugate) {
  auto x = additive_log_ratio(y);
  if (!x) return kInf;
  return kappa_conjugate(*x);
}

}  // namespace ncmd
