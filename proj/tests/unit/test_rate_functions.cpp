#include <cmath>
#include <numbers>

#include <boost/math/tools/minima.hpp>
#include <doctest.h>

#include "ncmd/rate_functions.hpp"
#include "property.hpp"

using namespace ncmd;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Matrix mat1(double v) { return Matrix::Constant(1, 1, v); }

// 1-D conjugate by a coarse grid followed by Brent refinement.
double scalar_conjugate(const std::function<double(double)>& lambda, double x, double lo = -20.0, double hi = 20.0) {
  auto neg = [&](double th) {
    const double v = lambda(th);
    return std::isfinite(v) ? v - th * x : 1e300;
  };
  const int points = 4001;
  int best = 0;
  double best_v = kInf;
  for (int i = 0; i < points; ++i) {
    const double v = neg(lo + (hi - lo) * i / (points - 1));
    if (v < best_v) best_v = v, best = i;
  }
  const double step = (hi - lo) / (points - 1);
  const double a = lo + step * std::max(0, best - 1);
  const double b = lo + step * std::min(points - 1, best + 1);
  const auto r = boost::math::tools::brent_find_minima(neg, a, b, 52);
  return -std::min(r.second, best_v);
}

double grid_infimum(const std::function<double(double)>& f, double lo, double hi, int points) {
  double best = kInf;
  for (int i = 0; i < points; ++i) best = std::min(best, f(lo + (hi - lo) * i / (points - 1)));
  return best;
}

std::vector<double> grid(double lo, double hi, int points) {
  std::vector<double> out;
  for (int i = 0; i < points; ++i) out.push_back(lo + (hi - lo) * i / (points - 1));
  return out;
}

CumulantSpec gauss_spec(double mean, double var) { return LevyModel::brownian(vec({mean}), mat1(var)).cumulant(); }

}  // namespace

TEST_SUITE("rate_functions") {
  TEST_CASE("h_nu examples") {
    CHECK(h_nu(0.0, 1.0, 0.5) == 0.0);
    CHECK(h_nu(2.0, 1.0, 0.5) == doctest::Approx(1.0).epsilon(1e-14));
    const double oracle = scalar_conjugate([](double t) { return t >= 0 ? t * t : 0.0; }, 2.0);
    CHECK(oracle == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::isinf(h_nu(-1.0, 1.0, 0.5)));
    CHECK(std::isinf(h_nu(1.0, -2.0, 0.3)));
    CHECK(h_nu(-1.0, -2.0, 0.3) == doctest::Approx(h_nu(0.5, 1.0, 0.3)));
  }

  TEST_CASE("imm_md_centered_1d examples") {
    CHECK(imm_md_centered_1d(0.0, 1.0, 0.5) == 0.0);
    CHECK(imm_md_centered_1d(1.0, 1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(imm_md_centered_1d(1.0, 2.0, 0.5) == doctest::Approx(0.472471).epsilon(1e-6));
    const double oracle = scalar_conjugate([](double t) { return std::pow(t * t, 2.0); }, 1.0);
    CHECK(std::abs(imm_md_centered_1d(1.0, 2.0, 0.5) - oracle) < 1e-4);
  }

  TEST_CASE("explicit cases examples") {
    const auto zero = imm_md_explicit_cases(vec({0.0, 0.0}), vec({2.0, 1.0}), 0.5);
    CHECK(zero.tag == ExplicitCase::Tag::Ray);
    CHECK(zero.c == 0.0);
    CHECK(zero.value == 0.0);

    const auto ii = imm_md_explicit_cases(vec({1.0, 1.0}), vec({1.0, 0.0}), 0.5);
    CHECK(ii.tag == ExplicitCase::Tag::ZeroMean);
    CHECK(std::isinf(ii.value));

    const auto i = imm_md_explicit_cases(vec({-1.0, 0.5}), vec({2.0, 1.0}), 0.5);
    CHECK(i.tag == ExplicitCase::Tag::OppositeSign);
    CHECK(std::isinf(i.value));

    const auto iii = imm_md_explicit_cases(vec({1.0, 0.5}), vec({2.0, 1.0}), 0.5);
    CHECK(iii.tag == ExplicitCase::Tag::Ray);
    CHECK(iii.c == doctest::Approx(0.5));
    CHECK(iii.value == doctest::Approx(0.0625).epsilon(1e-14));
    // along the ray the supremum is one-dimensional in s = <theta, m>
    const double oracle = scalar_conjugate([](double s) { return s >= 0 ? s * s : 0.0; }, 0.5);
    CHECK(std::abs(iii.value - oracle) < 1e-4);
    const auto numeric = LimitCumulant::imm_md_drift(0.5, vec({2.0, 1.0})).rate(vec({1.0, 0.5}));
    CHECK(std::abs(numeric.value - 0.0625) < 1e-4);

    // off the ray, theta orthogonal to m sees lambda = 0, so the supremum diverges
    const auto none = imm_md_explicit_cases(vec({1.0, 1.0}), vec({2.0, 1.0}), 0.5);
    CHECK(none.tag == ExplicitCase::Tag::None);
    CHECK(std::isinf(none.value));
  }

  TEST_CASE("binomial and Poisson rates") {
    for (double p : {0.1, 0.5, 0.8}) {
      const auto r = binomial_poisson_rates(p, p);
      CHECK(r.ld == doctest::Approx(0.0));
      CHECK(r.md == doctest::Approx(0.0));
    }
    const auto r = binomial_poisson_rates(0.75, 0.5);
    CHECK(r.ld == doctest::Approx(0.130812).epsilon(1e-5));
    CHECK(r.md == doctest::Approx(0.054099).epsilon(1e-5));
    const double ld_oracle = scalar_conjugate([](double t) { return std::log1p(0.5 * (std::exp(t) - 1.0)); }, 0.75);
    const double md_oracle = scalar_conjugate([](double t) { return 0.5 * (std::exp(t) - 1.0); }, 0.75);
    CHECK(std::abs(r.ld - ld_oracle) < 1e-9);
    CHECK(std::abs(r.md - md_oracle) < 1e-9);

    const auto out = binomial_poisson_rates(1.5, 0.5);
    CHECK(std::isinf(out.ld));
    CHECK(out.md == doctest::Approx(1.5 * std::log(3.0) - 1.5 + 0.5).epsilon(1e-14));
    const auto edge = binomial_poisson_rates(0.0, 0.3);
    CHECK(edge.ld == doctest::Approx(-std::log(0.7)));
    CHECK(edge.md == doctest::Approx(0.3));
    CHECK(binomial_poisson_rates(1.0, 0.3).ld == doctest::Approx(-std::log(0.3)));
    CHECK(std::isinf(binomial_poisson_rates(-0.1, 0.3).md));
    CHECK(poisson_rate(2.0, 2.0) == 0.0);
  }

  TEST_CASE("skew rate examples") {
    SkewParams zero{mat1(1.0), vec({0.0})};
    for (double y : grid(-2.0, 2.0, 9)) CHECK(skew_md_rate(vec({y}), zero).value == doctest::Approx(0.5 * y * y));

    SkewParams p{mat1(1.0), vec({0.6})};
    auto fiber_oracle = [&](double y) {
      return grid_infimum([&](double xh) { return 0.5 * skew_fiber_point(vec({y}), p.delta, xh).squaredNorm(); },
                          -10.0, 10.0, 400001);
    };
    const auto pos = skew_md_rate(vec({1.0}), p);
    CHECK(pos.branch == 2);
    CHECK(pos.value == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(pos.value - fiber_oracle(1.0)) < 1e-8);
    const auto neg = skew_md_rate(vec({-1.0}), p);
    CHECK(neg.branch == 1);
    CHECK(neg.value == doctest::Approx(0.78125).epsilon(1e-12));
    CHECK(std::abs(neg.value - fiber_oracle(-1.0)) < 1e-8);

    CHECK_THROWS(skew_md_rate(vec({1.0}), SkewParams{mat1(-1.0), vec({0.2})}));
    CHECK_THROWS(skew_md_rate(vec({1.0}), SkewParams{mat1(1.0), vec({1.0})}));
  }

  TEST_CASE("skew parameters a and b") {
    prop::for_all("skew a, b", 23, 50, [](Engine& rng, int) -> std::string {
      const std::size_t k = 1 + static_cast<std::size_t>(rng() % 3);
      SkewParams p{prop::spd(rng, k), prop::uniform_vector(rng, k, -0.95, 0.95)};
      const Vector y = prop::uniform_vector(rng, k, -2.0, 2.0);
      const Vector a = p.a(y), b = p.b();
      for (std::size_t j = 0; j < k; ++j) {
        const auto i = static_cast<Eigen::Index>(j);
        const double s = std::sqrt(1.0 - p.delta(i) * p.delta(i));
        if (std::abs(a(i) - y(i) / s) > 1e-14 * (1 + std::abs(a(i)))) return "a at " + prop::show(y);
        if (std::abs(b(i) - p.delta(i) / s) > 1e-14 * (1 + std::abs(b(i)))) return "b at " + prop::show(p.delta);
      }
      return {};
    });
  }

  TEST_CASE("skew closed form matches the fiber infimum in several dimensions") {
    prop::for_all("skew vs fiber", 29, 40, [](Engine& rng, int) -> std::string {
      const std::size_t k = 1 + static_cast<std::size_t>(rng() % 2);
      SkewParams p{prop::spd(rng, k), prop::uniform_vector(rng, k, -0.9, 0.9)};
      const Vector y = prop::uniform_vector(rng, k, -2.0, 2.0);
      const Matrix cov = p.full_covariance();
      const Matrix inv = cov.inverse();
      auto inner = [&](double xh) {
        const Vector x = skew_fiber_point(y, p.delta, xh);
        return 0.5 * x.dot(inv * x);
      };
      // the objective is quadratic on each half line
      const double lower = boost::math::tools::brent_find_minima(inner, -30.0, 0.0, 52).second;
      const double upper = boost::math::tools::brent_find_minima(inner, 0.0, 30.0, 52).second;
      const double closed = skew_md_rate(y, p).value;
      if (std::abs(closed - std::min(lower, upper)) > 1e-9) return "y=" + prop::show(y) + " delta=" + prop::show(p.delta);
      return {};
    });
  }

  TEST_CASE("limit cumulant examples") {
    const auto gauss = gauss_spec(0.0, 1.0);
    const MixtureLaw unit = MixtureLaw::point_mass(vec({1.0}));
    const std::vector<LimitCumulant> all = {
        LimitCumulant::imm_ld(0.5, gauss),
        LimitCumulant::imm_md_centered(0.5, mat1(1.0)),
        LimitCumulant::imm_md_drift(0.5, vec({1.0})),
        LimitCumulant::levy_ld(SubordinatorModel::gamma(1.0, 1.0), gauss),
        LimitCumulant::levy_md(1.0, gauss),
        LimitCumulant::poisson_ld(0.3, unit),
        LimitCumulant::poisson_md(0.3, unit),
        LimitCumulant::gauss_md(mat1(2.0)),
    };
    for (const auto& lc : all) {
      CAPTURE(lc.name());
      CHECK(lc(vec({0.0})) == 0.0);
    }
    CHECK(LimitCumulant::imm_ld(0.5, gauss)(vec({2.0})) == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(f_nu(2.0, 0.5) == 4.0);
    CHECK(f_nu(-2.0, 0.5) == 0.0);

    // (1/n) log E exp(K), K ~ Binomial(n, 0.3), summed over the pmf in log space
    const int n = 1000000;
    const double p = 0.3, theta = 1.0;
    std::vector<double> logs(n + 1);
    double top = -kInf;
    for (int k = 0; k <= n; ++k) {
      logs[k] = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * std::log(p) +
                (n - k) * std::log1p(-p) + theta * k;
      top = std::max(top, logs[k]);
    }
    double s = 0.0;
    for (double l : logs) s += std::exp(l - top);
    const double oracle = (top + std::log(s)) / n;
    const double value = LimitCumulant::poisson_ld(p, unit)(vec({theta}));
    CHECK(std::abs(value - oracle) < 1e-8);
    CHECK(value == doctest::Approx(0.415735).epsilon(1e-6));

    // +inf propagates from the clock
    const auto levy = LimitCumulant::levy_ld(SubordinatorModel::gamma(1.0, 1.0), gauss);
    CHECK(std::isinf(levy(vec({2.0}))));
  }

  TEST_CASE("limit cumulants are midpoint convex") {
    const auto cp = LevyModel::compound_poisson(1.0, MixtureLaw::gaussian(vec({0.5, -0.2}), Matrix::Identity(2, 2) * 0.3));
    const std::vector<LimitCumulant> all = {
        LimitCumulant::imm_ld(0.4, cp.cumulant()),
        LimitCumulant::imm_md_centered(0.6, Matrix{{1.0, 0.2}, {0.2, 0.5}}),
        LimitCumulant::imm_md_drift(0.7, vec({1.0, -2.0})),
        LimitCumulant::levy_ld(SubordinatorModel::poisson(2.0), cp.cumulant()),
        LimitCumulant::levy_md(1.5, cp.cumulant()),
        LimitCumulant::poisson_ld(0.3, MixtureLaw::rademacher(2)),
        LimitCumulant::poisson_md(1.2, MixtureLaw::rademacher(2)),
        LimitCumulant::gauss_md(Matrix{{1.0, 0.1}, {0.1, 2.0}}),
    };
    for (const auto& lc : all) {
      prop::for_all("convexity " + lc.name(), 31, 100, [&](Engine& rng, int) -> std::string {
        const Vector a = prop::uniform_vector(rng, 2, -1.5, 1.5);
        const Vector b = prop::uniform_vector(rng, 2, -1.5, 1.5);
        const double fa = lc(a), fb = lc(b);
        if (!std::isfinite(fa) || !std::isfinite(fb)) return {};
        if (lc(Vector((a + b) / 2)) <= (fa + fb) / 2 + 1e-12 * (1 + std::abs(fa) + std::abs(fb))) return {};
        return prop::show(a) + " " + prop::show(b);
      });
    }
  }

  TEST_CASE("closed forms match the numerical conjugate on 50-point grids") {
    const double tol = 1e-4;
    auto compare = [&](const std::string& name, const LimitCumulant& lc, const std::vector<double>& xs,
                       const std::function<double(double)>& closed) {
      int finite = 0;
      for (double x : xs) {
        const double want = closed(x);
        const auto got = lc.rate(vec({x}));
        CAPTURE(name);
        CAPTURE(x);
        CHECK(std::isinf(want) == std::isinf(got.value));
        if (std::isfinite(want)) {
          ++finite;
          CHECK(std::abs(got.value - want) <= tol);
        }
      }
      CHECK(finite > 0);
    };
    const auto xs = grid(-2.0, 2.0, 50);
    const auto bm_drift = gauss_spec(1.0, 1.0);
    const auto bm = gauss_spec(0.0, 1.0);
    const double nu = 0.5;
    compare("imm-ld drift", LimitCumulant::imm_ld(nu, LevyModel::drift(vec({1.0})).cumulant()), xs,
            [&](double x) { return h_nu(x, 1.0, nu); });
    compare("imm-md centered", LimitCumulant::imm_md_centered(0.6, mat1(2.0)), xs,
            [](double x) { return imm_md_centered_1d(x, 2.0, 0.6); });
    compare("imm-md drift", LimitCumulant::imm_md(0.7, bm_drift), xs, [](double x) { return h_nu(x, 1.0, 0.7); });
    compare("levy-md", LimitCumulant::levy_md(2.0, bm), xs, [](double x) { return x * x / 4.0; });
    compare("levy-ld drift", LimitCumulant::levy_ld(SubordinatorModel::gamma(2.0, 1.0), LevyModel::drift(vec({1.0})).cumulant()),
            grid(0.05, 6.0, 50), [](double x) { return subordinated_drift_rate(x, 1.0, SubordinatorModel::gamma(2.0, 1.0)); });
    const MixtureLaw unit = MixtureLaw::point_mass(vec({1.0}));
    compare("poisson-ld", LimitCumulant::poisson_ld(0.4, unit), grid(-0.5, 1.5, 50),
            [](double x) { return binomial_poisson_rates(x, 0.4).ld; });
    compare("poisson-md", LimitCumulant::poisson_md(0.4, unit), grid(-0.5, 3.0, 50),
            [](double x) { return binomial_poisson_rates(x, 0.4).md; });
    compare("gauss-md", LimitCumulant::gauss_md(mat1(0.8)), xs,
            [](double x) { return gaussian_quadratic_rate(vec({x}), mat1(0.8)); });
  }

  TEST_CASE("clock inequality: I_MD >= I_LD with a common zero") {
    const MixtureLaw jumps = MixtureLaw::gaussian(vec({0.5}), mat1(0.4));
    const std::vector<std::pair<SubordinatorModel, CumulantSpec>> pairs = {
        {SubordinatorModel::gamma(2.0, 2.0), gauss_spec(0.5, 1.0)},
        {SubordinatorModel::poisson(1.5), LevyModel::compound_poisson(1.0, jumps).cumulant()},
        {SubordinatorModel::gamma(1.0, 0.5), LevyModel::compound_poisson(2.0, jumps).cumulant()},
        {SubordinatorModel::poisson(0.7), gauss_spec(-0.3, 0.5)},
    };
    for (const auto& [clock, ks] : pairs) {
      const auto ld = LimitCumulant::levy_ld(clock, ks);
      const auto md = LimitCumulant::levy_md(clock.mean_rate(), ks);
      const double zero = clock.mean_rate() * ks.grad0(0);
      CAPTURE(clock.describe());
      CHECK(std::abs(ld.rate(vec({zero})).value) <= 1e-8);
      CHECK(std::abs(md.rate(vec({zero})).value) <= 1e-8);
      for (double x : grid(zero - 2.0, zero + 2.0, 41)) {
        CAPTURE(x);
        const double a = ld.rate(vec({x})).value, b = md.rate(vec({x})).value;
        CHECK(b >= a - 1e-8);
        if (std::abs(x - zero) > 1e-6) CHECK(a > 1e-8);
      }
    }
  }

  TEST_CASE("array inequality: I_LD >= I_MD with lambda = p") {
    for (double p : {0.2, 0.5, 0.7}) {
      double min_diff = kInf, argmin = 0.0;
      for (double x : grid(0.0, 1.0, 101)) {
        const auto r = binomial_poisson_rates(x, p);
        CHECK(r.ld >= r.md - 1e-15);
        if (r.ld - r.md < min_diff) min_diff = r.ld - r.md, argmin = x;
      }
      CHECK(std::abs(min_diff) <= 1e-9);
      CHECK(argmin == doctest::Approx(p).epsilon(1e-12));
      for (double x : grid(1.01, 3.0, 20)) CHECK(std::isinf(binomial_poisson_rates(x, p).ld));
    }
  }

  TEST_CASE("logistic-normal rate matches the contraction") {
    const Matrix h{{1.0, 0.4}, {0.4, 0.6}};
    const Matrix hinv = h.inverse();
    prop::for_all("logistic rate", 37, 25, [&](Engine& rng, int) -> std::string {
      Vector w = prop::uniform_vector(rng, 3, 0.05, 1.0);
      w /= w.sum();
      ContractionProblem p;
      p.inner_rate = [&](const Vector& x) { return 0.5 * x.dot(hinv * x); };
      p.map = logistic_map;
      p.h = 2;
      p.y = w;
      const double closed = logistic_md_rate(w, h);
      const double contracted = contract(p).value;
      const auto alr = additive_log_ratio(w);
      if (!alr || (logistic_map(*alr) - w).norm() > 1e-12) return "alr round trip at " + prop::show(w);
      if (std::abs(closed - contracted) > 1e-4) return "y=" + prop::show(w);
      return {};
    });
    CHECK(std::isinf(logistic_md_rate(vec({0.5, 0.5, 0.0}), h)));
    CHECK_FALSE(additive_log_ratio(vec({0.5, 0.6, 0.1})).has_value());
  }

  TEST_CASE("degenerate moderate deviation model is rejected") {
    CHECK_THROWS(LimitCumulant::imm_md(0.5, LevyModel::drift(vec({0.0})).cumulant()));
    CHECK_THROWS(h_nu(1.0, 0.0, 0.5));
  }
}
