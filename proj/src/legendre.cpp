#include "ncmd/legendre.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

namespace ncmd {

namespace {

constexpr std::size_t kMaxConjugateDim = 6;
constexpr int kMaxIterations = 500;
constexpr int kMaxBacktracks = 80;
constexpr int kMaxExpansions = 60;
constexpr double kArmijo = 1e-4;

struct Objective {
  const ConjugateProblem& p;
  mutable std::size_t evals = 0;

  double lambda(const Vector& th) const {
    ++evals;
    const double v = p.lambda(th);
    return std::isnan(v) ? kInf : v;
  }
  double f(const Vector& th) const {
    const double l = lambda(th);
    return l == kInf ? kInf : l - th.dot(p.x);
  }
  Vector grad(const Vector& th) const {
    if (p.gradient) return p.gradient(th) - p.x;
    return numerical_gradient([this](const Vector& v) { return lambda(v); }, th) - p.x;
  }
};

struct RunOutcome {
  double value = -kInf;
  Vector theta;
  double residual = kInf;
  bool converged = false;
  bool diverged = false;
};

void probe_convexity(const Objective& obj, const Vector& a, double fa, const Vector& b, double fb) {
  // f differs from lambda by a linear term, so midpoint convexity transfers.
  const Vector mid = 0.5 * (a + b);
  const double fm = obj.f(mid);
  const double slack = 1e-9 * (1.0 + std::fabs(fa) + std::fabs(fb) + std::fabs(mid.dot(obj.p.x)));
  if (!(fm <= 0.5 * (fa + fb) + slack))
    throw NonConvexityError("conjugate: midpoint convexity violated along the search path (excess " +
                            std::to_string(fm - 0.5 * (fa + fb)) + ")");
}

Vector newton_direction(const Matrix& hess, const Vector& g) {
  const auto h = hess.rows();
  double mu = 0.0;
  const double scale = 1.0 + hess.cwiseAbs().maxCoeff();
  for (int k = 0; k < 60; ++k) {
    Eigen::LDLT<Matrix> ldlt(hess + mu * Matrix::Identity(h, h));
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      Vector d = -ldlt.solve(g);
      if (d.allFinite() && g.dot(d) < 0.0) return d;
    }
    mu = mu == 0.0 ? 1e-10 * scale : 4.0 * mu;
  }
  return -g;
}

RunOutcome maximize_from(const Objective& obj, Vector theta) {
  const auto& p = obj.p;
  const auto h = theta.size();
  const double gtol = p.solver_tol * (1.0 + p.x.norm());
  RunOutcome out;

  double f = obj.f(theta);
  if (f == kInf) return out;
  Vector g = obj.grad(theta);
  Matrix inv_hess = Matrix::Identity(h, h);
  bool scaled = false;
  bool steepest = false;

  for (int it = 0; it < kMaxIterations; ++it) {
    if (!g.allFinite()) break;
    if (g.norm() <= gtol) {
      out.converged = true;
      break;
    }
    Vector d = p.hessian && !steepest ? newton_direction(p.hessian(theta), g) : Vector(-inv_hess * g);
    double gd = g.dot(d);
    if (!(gd < 0.0) || !d.allFinite()) {
      inv_hess.setIdentity();
      d = -g;
      gd = -g.squaredNorm();
    }

    double step = 1.0;
    bool accepted = false;
    Vector trial;
    double f_trial = kInf;
    for (int k = 0; k < kMaxBacktracks; ++k) {
      trial = theta + step * d;
      f_trial = obj.f(trial);
      if (std::isfinite(f_trial) && f_trial <= f + kArmijo * step * gd) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (steepest) break;
      // retry once along the plain gradient before giving up
      steepest = true;
      inv_hess.setIdentity();
      scaled = false;
      continue;
    }
    if (step == 1.0) {
      for (int k = 0; k < kMaxExpansions && -f_trial <= p.infinity_threshold; ++k) {
        const Vector further = theta + (2.0 * step) * d;
        const double f_further = obj.f(further);
        if (!(std::isfinite(f_further) && f_further < f_trial)) break;
        step *= 2.0;
        trial = further;
        f_trial = f_further;
      }
    }
    probe_convexity(obj, theta, f, trial, f_trial);
    if (-f_trial > p.infinity_threshold) {
      out.diverged = true;
      out.value = kInf;
      return out;
    }

    const Vector g_new = obj.grad(trial);
    const Vector s = trial - theta;
    const Vector yv = g_new - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm() && sy > 0.0) {
      if (!scaled) {
        inv_hess *= sy / yv.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Matrix left = Matrix::Identity(h, h) - rho * s * yv.transpose();
      inv_hess = left * inv_hess * left.transpose() + rho * s * s.transpose();
    }
    steepest = false;
    const double change = f - f_trial;
    theta = trial;
    f = f_trial;
    g = g_new;
    if (change <= 1e-15 * (1.0 + std::fabs(f)) && s.norm() <= 1e-13 * (1.0 + theta.norm())) break;
  }
  out.value = -f;
  out.theta = theta;
  out.residual = g.norm();
  out.converged = out.converged || out.residual <= gtol;
  return out;
}

}  // namespace

Vector numerical_gradient(const ScalarField& f, const Vector& theta) {
  const auto h = theta.size();
  Vector g(h);
  const double f0 = f(theta);
  for (Eigen::Index i = 0; i < h; ++i) {
    const double step = 6e-6 * std::max(1.0, std::fabs(theta(i)));
    Vector up = theta, down = theta;
    up(i) += step;
    down(i) -= step;
    const double fu = f(up), fd = f(down);
    const bool ok_u = std::isfinite(fu), ok_d = std::isfinite(fd);
    if (ok_u && ok_d)
      g(i) = (fu - fd) / (2.0 * step);
    else if (ok_u)
      g(i) = (fu - f0) / step;
    else if (ok_d)
      g(i) = (f0 - fd) / step;
    else
      g(i) = std::numeric_limits<double>::quiet_NaN();
  }
  return g;
}

ConjugateResult conjugate(const ConjugateProblem& problem) {
  if (!problem.lambda) throw std::invalid_argument("conjugate: lambda is not set");
  const auto h = static_cast<std::size_t>(problem.x.size());
  if (h == 0) throw std::invalid_argument("conjugate: empty target point");
  if (h > kMaxConjugateDim) throw std::invalid_argument("conjugate: dimension above 6 is not supported");
  if (!problem.x.allFinite()) throw std::invalid_argument("conjugate: target point must be finite");
  if (!(problem.solver_tol > 0.0)) throw std::invalid_argument("conjugate: solver_tol must be positive");

  const Objective obj{problem};
  const Vector origin = Vector::Zero(static_cast<Eigen::Index>(h));
  const double at_origin = obj.lambda(origin);
  if (!(std::fabs(at_origin) <= 1e-12)) throw std::invalid_argument("conjugate: lambda(0) must be 0");

  ConjugateResult result;
  result.essentially_smooth = problem.essentially_smooth;
  RunOutcome best = maximize_from(obj, origin);

  if (!best.diverged) {
    Engine rng = make_stream(problem.seed, 0);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const double radius = std::min(1.0, 0.5 * problem.domain_radius / std::sqrt(static_cast<double>(h)));
    for (unsigned r = 0; r < problem.restarts; ++r) {
      Vector start(static_cast<Eigen::Index>(h));
      for (auto& v : start) v = radius * uni(rng);
      for (int k = 0; k < 40 && obj.lambda(start) == kInf; ++k) start *= 0.5;
      RunOutcome run = maximize_from(obj, start);
      if (run.diverged) {
        best = run;
        break;
      }
      // among runs that agree to rounding, keep the one closest to stationarity
      const double tie = 1e-12 * (1.0 + std::fabs(best.value));
      if (run.value > best.value + tie || (run.value >= best.value - tie && run.residual < best.residual)) best = run;
    }
  }

  result.evaluations = obj.evals;
  if (best.diverged) {
    result.value = kInf;
    result.converged = true;
    return result;
  }
  result.value = std::max(0.0, best.value);
  result.argmax = best.theta;
  result.converged = best.converged;
  result.gradient_residual = best.residual;
  return result;
}

// ---------------------------------------------------------------------------
// Contraction

namespace {

constexpr std::size_t kGrid1d = 2001;
constexpr std::size_t kGrid2d = 201;
constexpr std::size_t kZoomGrid2d = 21;

class FiberSolver {
 public:
  explicit FiberSolver(const ContractionProblem& p) : p_(p) {
    k_ = static_cast<std::size_t>(p.y.size());
    free_ = p.h > k_ ? p.h - k_ : 0;
    dep_ = p.h - free_;
    warm_ = Vector::Zero(static_cast<Eigen::Index>(dep_));
    tol_ = 1e-10 * (1.0 + p.y.norm());
  }

  std::size_t free_dim() const { return free_; }

  /// Point of the fiber with the given free coordinates, if one exists.
  std::optional<Vector> point(const Vector& free) {
    if (auto x = solve_from(warm_, free)) return x;
    if (!warm_.isZero(0.0))
      if (auto x = solve_from(Vector::Zero(static_cast<Eigen::Index>(dep_)), free)) return x;
    return std::nullopt;
  }

 private:
  Vector assemble(const Vector& dep, const Vector& free) const {
    Vector x(static_cast<Eigen::Index>(p_.h));
    x.head(static_cast<Eigen::Index>(dep_)) = dep;
    x.tail(static_cast<Eigen::Index>(free_)) = free;
    return x;
  }

  double residual_norm(const Vector& x) const {
    const Vector r = p_.map(x) - p_.y;
    return r.allFinite() ? r.norm() : kInf;
  }

  std::optional<Vector> solve_from(Vector dep, const Vector& free) {
    Vector x = assemble(dep, free);
    Vector r = p_.map(x) - p_.y;
    if (!r.allFinite()) return std::nullopt;
    double mu = 1e-3;
    for (int it = 0; it < 200; ++it) {
      if (r.norm() <= tol_) {
        warm_ = dep;
        return x;
      }
      Matrix jac(static_cast<Eigen::Index>(k_), static_cast<Eigen::Index>(dep_));
      for (std::size_t j = 0; j < dep_; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const double step = 1e-7 * std::max(1.0, std::fabs(dep(jj)));
        Vector up = dep, down = dep;
        up(jj) += step;
        down(jj) -= step;
        jac.col(jj) = (p_.map(assemble(up, free)) - p_.map(assemble(down, free))) / (2.0 * step);
      }
      const Matrix jtj = jac.transpose() * jac;
      const Vector jtr = jac.transpose() * r;
      bool improved = false;
      while (mu < 1e16) {
        Matrix damped = jtj;
        damped.diagonal().array() += mu * (1.0 + jtj.diagonal().array());
        const Vector delta = -damped.ldlt().solve(jtr);
        const Vector cand = dep + delta;
        const Vector xc = assemble(cand, free);
        const double rc = residual_norm(xc);
        if (rc < r.norm()) {
          dep = cand;
          x = xc;
          r = p_.map(x) - p_.y;
          mu = std::max(1e-12, mu / 3.0);
          improved = true;
          break;
        }
        mu *= 4.0;
      }
      if (!improved) break;
    }
    return std::nullopt;
  }

  const ContractionProblem& p_;
  std::size_t k_ = 0, free_ = 0, dep_ = 0;
  Vector warm_;
  double tol_ = 0.0;
};

struct Candidate {
  double value = kInf;
  Vector x;
};

template <class PointFn>
Candidate evaluate(PointFn& point_of, const ScalarField& inner, const Vector& t, std::size_t& count) {
  Candidate c;
  if (auto x = point_of(t)) {
    ++count;
    const double v = inner(*x);
    c.value = std::isnan(v) ? kInf : v;
    c.x = std::move(*x);
  }
  return c;
}

template <class PointFn>
ContractionResult search_fiber(PointFn point_of, const ContractionProblem& p, std::size_t dim) {
  ContractionResult res;
  Candidate best;
  auto consider = [&](const Vector& t) {
    Candidate c = evaluate(point_of, p.inner_rate, t, res.fiber_points);
    if (c.value < best.value || (best.x.size() == 0 && c.x.size() > 0)) best = std::move(c);
    return best.value;
  };

  if (dim == 0) {
    consider(Vector());
  } else if (dim == 1) {
    auto phi = [&](double t) {
      Candidate c = evaluate(point_of, p.inner_rate, Vector::Constant(1, t), res.fiber_points);
      const double v = c.value;
      if (v < best.value || (best.x.size() == 0 && c.x.size() > 0)) best = std::move(c);
      return v;
    };
    const double lo = -p.box, hi = p.box;
    const double spacing = (hi - lo) / static_cast<double>(kGrid1d - 1);
    std::vector<double> vals(kGrid1d);
    for (std::size_t i = 0; i < kGrid1d; ++i) vals[i] = phi(lo + spacing * static_cast<double>(i));
    const auto imin = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
    if (vals[imin] < kInf) {
      // golden-section refinement on the two cells around the grid minimum
      double a = lo + spacing * static_cast<double>(imin == 0 ? 0 : imin - 1);
      double b = lo + spacing * static_cast<double>(std::min(kGrid1d - 1, imin + 1));
      const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
      double c = b - invphi * (b - a), d = a + invphi * (b - a);
      double fc = phi(c), fd = phi(d);
      for (int it = 0; it < 200 && (b - a) > 1e-10 * (1.0 + std::fabs(a)); ++it) {
        if (fc <= fd) {
          b = d;
          d = c;
          fd = fc;
          c = b - invphi * (b - a);
          fc = phi(c);
        } else {
          a = c;
          c = d;
          fc = fd;
          d = a + invphi * (b - a);
          fd = phi(d);
        }
      }
    }
  } else {
    Vector center = Vector::Zero(2);
    double half = p.box;
    // Full grids zoom in until the spacing reaches `resolution` of the box
    // width, then small grids continue down to the 1-D refinement tolerance.
    const double coarse = p.resolution * 2.0 * p.box;
    bool fine = false;
    for (int level = 0; level < 80; ++level) {
      const std::size_t n = fine ? kZoomGrid2d : kGrid2d;
      const double spacing = 2.0 * half / static_cast<double>(n - 1);
      Vector arg = center;
      double val = kInf;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          Vector t(2);
          t << center(0) - half + spacing * static_cast<double>(i), center(1) - half + spacing * static_cast<double>(j);
          Candidate c = evaluate(point_of, p.inner_rate, t, res.fiber_points);
          if (c.value < val) {
            val = c.value;
            arg = t;
          }
          if (c.value < best.value || (best.x.size() == 0 && c.x.size() > 0)) best = std::move(c);
        }
      }
      if (val == kInf || spacing <= 1e-10 * (1.0 + arg.norm())) break;
      fine = fine || spacing <= coarse;
      center = arg;
      half = 2.0 * spacing;
    }
  }
  res.value = best.value;
  res.argmin = best.x;
  return res;
}

}  // namespace

ContractionResult contract(const ContractionProblem& problem) {
  if (!problem.inner_rate) throw std::invalid_argument("contract: inner_rate is not set");
  if (problem.h == 0) throw std::invalid_argument("contract: h must be positive");
  if (!(problem.box > 0.0)) throw std::invalid_argument("contract: box must be positive");
  if (!(problem.resolution > 0.0 && problem.resolution < 1.0))
    throw std::invalid_argument("contract: resolution must lie in (0,1)");

  if (problem.parametrization) {
    if (problem.fiber_dim > 2) throw std::invalid_argument("contract: fiber search supports at most two parameters");
    auto point_of = [&problem](const Vector& t) -> std::optional<Vector> {
      Vector x = problem.parametrization(t);
      if (!x.allFinite()) return std::nullopt;
      return x;
    };
    return search_fiber(point_of, problem, problem.fiber_dim);
  }

  if (!problem.map) throw std::invalid_argument("contract: map is not set");
  FiberSolver solver(problem);
  if (solver.free_dim() > 2)
    throw std::invalid_argument("contract: fiber of dimension " + std::to_string(solver.free_dim()) +
                                " needs an explicit parametrization");
  auto point_of = [&solver](const Vector& t) { return solver.point(t); };
  return search_fiber(point_of, problem, solver.free_dim());
}

}  // namespace ncmd
