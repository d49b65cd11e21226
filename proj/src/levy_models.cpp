#include "ncmd/levy_models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace ncmd {

namespace {

Matrix psd_factor(const Matrix& cov) {
  if (cov.size() == 0 || cov.isZero(0.0)) return Matrix::Zero(cov.rows(), cov.cols());
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  Vector ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.minCoeff() < -1e-10 * scale) throw std::invalid_argument("covariance matrix is not positive semidefinite");
  return es.eigenvectors() * ev.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

void require_symmetric(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) throw std::invalid_argument(std::string(what) + " must be square");
  if (!m.isApprox(m.transpose(), 1e-12) && !(m - m.transpose()).isZero(1e-14))
    throw std::invalid_argument(std::string(what) + " must be symmetric");
}

Vector standard_normal(Eigen::Index n, Engine& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = nd(rng);
  return z;
}

std::string vec_str(const Vector& v) {
  std::ostringstream os;
  os << "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? "," : "") << v(i);
  os << "]";
  return os.str();
}

}  // namespace

double CumulantSpec::operator()(double theta) const {
  if (dim != 1) throw std::invalid_argument("CumulantSpec: scalar call on a multivariate cumulant");
  Vector t(1);
  t(0) = theta;
  return eval(t);
}

// ---------------------------------------------------------------------------
// MixtureLaw

MixtureLaw::MixtureLaw(std::vector<MixtureComponent> components) : components_(std::move(components)) {
  if (components_.empty()) throw std::invalid_argument("MixtureLaw: needs at least one component");
  dim_ = static_cast<std::size_t>(components_.front().mean.size());
  if (dim_ == 0) throw std::invalid_argument("MixtureLaw: zero-dimensional component");
  double total = 0.0;
  for (auto& c : components_) {
    if (static_cast<std::size_t>(c.mean.size()) != dim_)
      throw std::invalid_argument("MixtureLaw: components have different dimensions");
    if (!(c.weight > 0.0) || !std::isfinite(c.weight))
      throw std::invalid_argument("MixtureLaw: component weights must be positive");
    if (c.cov.size() == 0) c.cov = Matrix::Zero(c.mean.size(), c.mean.size());
    if (static_cast<std::size_t>(c.cov.rows()) != dim_) throw std::invalid_argument("MixtureLaw: covariance has wrong size");
    require_symmetric(c.cov, "MixtureLaw covariance");
    total += c.weight;
  }
  for (auto& c : components_) {
    c.weight /= total;
    factors_.push_back(psd_factor(c.cov));
    is_atom_.push_back(c.cov.isZero(0.0));
  }
}

MixtureLaw MixtureLaw::point_mass(const Vector& at) {
  return MixtureLaw({MixtureComponent{1.0, at, Matrix::Zero(at.size(), at.size())}});
}

MixtureLaw MixtureLaw::gaussian(const Vector& mean, const Matrix& cov) {
  return MixtureLaw({MixtureComponent{1.0, mean, cov}});
}

MixtureLaw MixtureLaw::rademacher(std::size_t dim) {
  if (dim == 0 || dim > 10) throw std::invalid_argument("MixtureLaw::rademacher: dim must be in [1, 10]");
  std::vector<MixtureComponent> comps;
  const std::size_t count = std::size_t{1} << dim;
  for (std::size_t mask = 0; mask < count; ++mask) {
    Vector at(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) at(static_cast<Eigen::Index>(i)) = (mask >> i) & 1U ? 1.0 : -1.0;
    comps.push_back({1.0, at, Matrix::Zero(at.size(), at.size())});
  }
  return MixtureLaw(std::move(comps));
}

double MixtureLaw::log_mgf(const Vector& theta) const {
  double hi = -kInf;
  std::vector<double> expo(components_.size());
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto& c = components_[k];
    expo[k] = std::log(c.weight) + theta.dot(c.mean) + 0.5 * theta.dot(c.cov * theta);
    hi = std::max(hi, expo[k]);
  }
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double e : expo) s += std::exp(e - hi);
  return hi + std::log(s);
}

double MixtureLaw::mgf(const Vector& theta) const { return std::exp(log_mgf(theta)); }

Vector MixtureLaw::mean() const {
  Vector m = Vector::Zero(static_cast<Eigen::Index>(dim_));
  for (const auto& c : components_) m += c.weight * c.mean;
  return m;
}

Matrix MixtureLaw::second_moment() const {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
  for (const auto& c : components_) m += c.weight * (c.cov + c.mean * c.mean.transpose());
  return m;
}

Matrix MixtureLaw::covariance() const {
  Vector mu = mean();
  return second_moment() - mu * mu.transpose();
}

CumulantSpec MixtureLaw::cumulant() const {
  CumulantSpec spec;
  spec.dim = dim_;
  auto self = std::make_shared<const MixtureLaw>(*this);
  spec.eval = [self](const Vector& th) { return self->log_mgf(th); };
  spec.grad0 = mean();
  spec.hess0 = covariance();
  spec.domain_radius = kInf;
  spec.essentially_smooth = true;
  return spec;
}

MixtureLaw MixtureLaw::tilted(const Vector& theta) const {
  std::vector<MixtureComponent> out;
  const double lg = log_mgf(theta);
  if (!std::isfinite(lg)) throw std::domain_error("MixtureLaw::tilted: MGF is infinite at theta");
  for (const auto& c : components_) {
    const double e = std::log(c.weight) + theta.dot(c.mean) + 0.5 * theta.dot(c.cov * theta) - lg;
    out.push_back({std::exp(e), c.mean + c.cov * theta, c.cov});
  }
  return MixtureLaw(std::move(out));
}

bool MixtureLaw::has_atom_at_zero() const {
  for (std::size_t k = 0; k < components_.size(); ++k)
    if (is_atom_[k] && components_[k].mean.isZero(0.0)) return true;
  return false;
}

bool MixtureLaw::is_single_unit_atom() const {
  return dim_ == 1 && components_.size() == 1 && is_atom_[0] && components_[0].mean(0) == 1.0;
}

Vector MixtureLaw::sample(Engine& rng) const {
  std::size_t k = 0;
  if (components_.size() > 1) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double r = u(rng);
    while (k + 1 < components_.size() && r >= components_[k].weight) {
      r -= components_[k].weight;
      ++k;
    }
  }
  Vector x = components_[k].mean;
  if (!is_atom_[k]) x += factors_[k] * standard_normal(x.size(), rng);
  return x;
}

Vector MixtureLaw::sample_sum(std::uint64_t count, Engine& rng) const {
  Vector total = Vector::Zero(static_cast<Eigen::Index>(dim_));
  if (count == 0) return total;
  std::uint64_t remaining = count;
  double rest = 1.0;
  for (std::size_t k = 0; k < components_.size() && remaining > 0; ++k) {
    std::uint64_t nk = remaining;
    if (k + 1 < components_.size()) {
      const double q = std::clamp(components_[k].weight / rest, 0.0, 1.0);
      std::binomial_distribution<std::uint64_t> bd(remaining, q);
      nk = bd(rng);
    }
    rest -= components_[k].weight;
    remaining -= nk;
    if (nk == 0) continue;
    const double nkd = static_cast<double>(nk);
    total += nkd * components_[k].mean;
    if (!is_atom_[k]) total += std::sqrt(nkd) * (factors_[k] * standard_normal(total.size(), rng));
  }
  return total;
}

std::string MixtureLaw::describe() const {
  std::ostringstream os;
  os << "mixture{";
  for (std::size_t k = 0; k < components_.size(); ++k) {
    os << (k ? "; " : "") << components_[k].weight << "*" << (is_atom_[k] ? "delta" : "N") << vec_str(components_[k].mean);
  }
  os << "}";
  return os.str();
}

// ---------------------------------------------------------------------------
// LevyModel

LevyModel LevyModel::brownian(const Vector& drift, const Matrix& cov) {
  if (drift.size() == 0) throw std::invalid_argument("LevyModel::brownian: empty drift");
  if (cov.rows() != drift.size()) throw std::invalid_argument("LevyModel::brownian: covariance size mismatch");
  require_symmetric(cov, "Brownian covariance");
  LevyModel m;
  m.kind_ = Kind::BrownianWithDrift;
  m.drift_ = drift;
  m.cov_ = cov;
  m.factor_ = psd_factor(cov);
  auto& c = m.cumulant_;
  c.dim = static_cast<std::size_t>(drift.size());
  c.eval = [drift, cov](const Vector& th) { return th.dot(drift) + 0.5 * th.dot(cov * th); };
  c.grad0 = drift;
  c.hess0 = cov;
  c.domain_radius = kInf;
  return m;
}

LevyModel LevyModel::compound_poisson(double rate, MixtureLaw jumps) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw std::invalid_argument("LevyModel::compound_poisson: rate must be positive");
  LevyModel m;
  m.kind_ = Kind::CompoundPoisson;
  m.rate_ = rate;
  auto law = std::make_shared<const MixtureLaw>(std::move(jumps));
  m.jumps_ = law;
  const auto d = static_cast<Eigen::Index>(law->dim());
  m.drift_ = Vector::Zero(d);
  m.cov_ = Matrix::Zero(d, d);
  auto& c = m.cumulant_;
  c.dim = law->dim();
  c.eval = [law, rate](const Vector& th) {
    const double lg = law->log_mgf(th);
    if (lg == kInf) return kInf;
    return rate * std::expm1(lg);
  };
  c.grad0 = rate * law->mean();
  c.hess0 = rate * law->second_moment();
  c.domain_radius = kInf;
  return m;
}

LevyModel LevyModel::drift(const Vector& velocity) {
  if (velocity.size() == 0) throw std::invalid_argument("LevyModel::drift: empty velocity");
  LevyModel m;
  m.kind_ = Kind::DeterministicDrift;
  m.drift_ = velocity;
  m.cov_ = Matrix::Zero(velocity.size(), velocity.size());
  auto& c = m.cumulant_;
  c.dim = static_cast<std::size_t>(velocity.size());
  c.eval = [velocity](const Vector& th) { return th.dot(velocity); };
  c.grad0 = velocity;
  c.hess0 = m.cov_;
  c.domain_radius = kInf;
  return m;
}

bool LevyModel::driftless() const { return cumulant_.grad0.isZero(0.0); }

Vector LevyModel::sample(double t, Engine& rng) const {
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("LevyModel::sample: t must be finite and >= 0");
  const auto d = static_cast<Eigen::Index>(dim());
  if (t == 0.0) return Vector::Zero(d);
  switch (kind_) {
    case Kind::BrownianWithDrift:
      return t * drift_ + std::sqrt(t) * (factor_ * standard_normal(d, rng));
    case Kind::DeterministicDrift:
      return t * drift_;
    case Kind::CompoundPoisson: {
      std::poisson_distribution<std::uint64_t> pd(rate_ * t);
      return jumps_->sample_sum(pd(rng), rng);
    }
  }
  throw std::logic_error("LevyModel::sample: unknown kind");
}

std::string LevyModel::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::BrownianWithDrift: os << "brownian(drift=" << vec_str(drift_) << ")"; break;
    case Kind::DeterministicDrift: os << "drift(" << vec_str(drift_) << ")"; break;
    case Kind::CompoundPoisson: os << "compound_poisson(rate=" << rate_ << ", jumps=" << jumps_->describe() << ")"; break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// SubordinatorModel

SubordinatorModel SubordinatorModel::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(shape) || !std::isfinite(rate))
    throw std::invalid_argument("gamma subordinator: shape and rate must be positive");
  SubordinatorModel s;
  s.kind_ = Kind::Gamma;
  s.a_ = shape;
  s.b_ = rate;
  s.mean_rate_ = shape / rate;
  auto& c = s.cumulant_;
  c.dim = 1;
  c.eval = [shape, rate](const Vector& eta) {
    if (eta(0) >= rate) return kInf;
    return -shape * std::log1p(-eta(0) / rate);
  };
  c.grad0 = Vector::Constant(1, shape / rate);
  c.hess0 = Matrix::Constant(1, 1, shape / (rate * rate));
  c.domain_radius = rate;
  return s;
}

SubordinatorModel SubordinatorModel::poisson(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw std::invalid_argument("poisson subordinator: rate must be positive");
  SubordinatorModel s;
  s.kind_ = Kind::Poisson;
  s.a_ = 1.0;
  s.b_ = rate;
  s.mean_rate_ = rate;
  auto& c = s.cumulant_;
  c.dim = 1;
  c.eval = [rate](const Vector& eta) { return rate * std::expm1(eta(0)); };
  c.grad0 = Vector::Constant(1, rate);
  c.hess0 = Matrix::Constant(1, 1, rate);
  c.domain_radius = kInf;
  return s;
}

SubordinatorModel SubordinatorModel::stable(double nu) {
  if (!(nu > 0.0 && nu < 1.0)) throw std::invalid_argument("stable subordinator: nu must lie in (0,1)");
  SubordinatorModel s;
  s.kind_ = Kind::StableDriftFree;
  s.a_ = nu;
  s.mean_rate_ = kInf;
  auto& c = s.cumulant_;
  c.dim = 1;
  c.eval = [nu](const Vector& eta) { return eta(0) > 0.0 ? kInf : -std::pow(-eta(0), nu); };
  c.grad0 = Vector::Constant(1, kInf);
  c.hess0 = Matrix::Constant(1, 1, kInf);
  c.domain_radius = 0.0;
  c.essentially_smooth = false;
  return s;
}

double SubordinatorModel::sample(double t, Engine& rng) const {
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("SubordinatorModel::sample: t must be finite and >= 0");
  if (t == 0.0) return 0.0;
  switch (kind_) {
    case Kind::Gamma: {
      std::gamma_distribution<double> gd(a_ * t, 1.0 / b_);
      return gd(rng);
    }
    case Kind::Poisson: {
      std::poisson_distribution<std::uint64_t> pd(b_ * t);
      return static_cast<double>(pd(rng));
    }
    case Kind::StableDriftFree:
      return std::pow(t, 1.0 / a_) * sample_positive_stable(a_, rng);
  }
  throw std::logic_error("SubordinatorModel::sample: unknown kind");
}

std::string SubordinatorModel::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::Gamma: os << "gamma(shape=" << a_ << ", rate=" << b_ << ")"; break;
    case Kind::Poisson: os << "poisson(rate=" << b_ << ")"; break;
    case Kind::StableDriftFree: os << "stable(nu=" << a_ << ")"; break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Triangular-array summands

TriangularSummandModel::TriangularSummandModel(MixtureLaw jumps, double p) : jumps_(std::move(jumps)), p_(p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("TriangularSummandModel: p must lie in [0,1]");
  if (jumps_.has_atom_at_zero()) throw std::invalid_argument("TriangularSummandModel: jump law must not charge 0");
}

Vector TriangularSummandModel::sample(Engine& rng) const {
  std::bernoulli_distribution bd(p_);
  if (bd(rng)) return jumps_.sample(rng);
  return Vector::Zero(static_cast<Eigen::Index>(dim()));
}

Vector TriangularSummandModel::sample_sum(std::uint64_t n, Engine& rng) const {
  std::binomial_distribution<std::uint64_t> bd(n, p_);
  return jumps_.sample_sum(bd(rng), rng);
}

double mgf_of_summand(const TriangularSummandModel& model, const Vector& theta) {
  const double p = model.p();
  if (p == 0.0) return 1.0;
  const double g = model.jump_mgf(theta);
  if (g == kInf) return kInf;
  return 1.0 - p + p * g;
}

// ---------------------------------------------------------------------------

SampleBatch sample_batch(const LevyModel& model, double t, std::size_t n, std::uint64_t seed) {
  if (!std::isfinite(t) || t < 0.0) throw std::invalid_argument("sample_batch: t must be finite and >= 0");
  return generate_batch(
      n, model.dim(), seed, [&model, t](Engine& rng, Engine&) { return model.sample(t, rng); },
      model.describe() + " at t");
}

SampleBatch sample_batch(const SubordinatorModel& model, double t, std::size_t n, std::uint64_t seed) {
  if (!std::isfinite(t) || t < 0.0) throw std::invalid_argument("sample_batch: t must be finite and >= 0");
  return generate_batch(
      n, 1, seed, [&model, t](Engine& rng, Engine&) { return Vector::Constant(1, model.sample(t, rng)); },
      model.describe() + " at t");
}

double sample_positive_stable(double nu, Engine& rng) {
  if (!(nu > 0.0 && nu < 1.0)) throw std::invalid_argument("sample_positive_stable: nu must lie in (0,1)");
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  double u = 0.0;
  do {
    u = uni(rng);
  } while (u == 0.0);
  const double angle = std::numbers::pi * u;
  double w = 0.0;
  do {
    w = expo(rng);
  } while (w == 0.0);
  const double log_s = std::log(std::sin(nu * angle)) - std::log(std::sin(angle)) / nu +
                       (1.0 - nu) / nu * (std::log(std::sin((1.0 - nu) * angle)) - std::log(w));
  return std::exp(log_s);
}

}  // namespace ncmd
