#include <cmath>
#include <numbers>

#include <doctest.h>

#include "ncmd/convergence_lab.hpp"
#include "ncmd/quadrature.hpp"

using namespace ncmd;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

std::vector<Vector> scalar_grid(std::initializer_list<double> xs) {
  std::vector<Vector> out;
  for (double x : xs) out.push_back(vec({x}));
  return out;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace

TEST_SUITE("convergence_lab") {
  TEST_CASE("exact-lambda array check at theta = 0 has zero error") {
    auto check = scgf_poisson_md(1.0, MixtureLaw::point_mass(vec({1.0})), ScalingRegime::power(0.1));
    check.grid = scalar_grid({0.0});
    check.horizons = {1e2, 1e4, 1e6};
    const auto rep = run_scgf_check(check);
    for (double e : rep.max_errors) CHECK(e == 0.0);
    CHECK(rep.pass);
  }

  TEST_CASE("Gamma clock check matches its closed form") {
    const auto bm = LevyModel::brownian(vec({0.0}), Matrix::Identity(1, 1));
    auto check = scgf_levy_md(SubordinatorModel::gamma(1.0, 1.0), bm.cumulant(), ScalingRegime::power(0.5));
    check.grid = scalar_grid({1.0});
    check.horizons = {1e2, 1e4, 1e6};
    const auto rep = run_scgf_check(check);
    for (std::size_t i = 0; i < rep.horizons.size(); ++i) {
      const double t = rep.horizons[i];
      const double closed = -std::sqrt(t) * std::log1p(-0.5 / std::sqrt(t));
      CHECK(rep.rows[i].prelimit == doctest::Approx(closed).epsilon(1e-13));
      // Taylor remainder of -log(1 - u)/u - 1 with u = 0.5/sqrt(t)
      const double u = 0.5 / std::sqrt(t);
      CHECK(rep.max_errors[i] == doctest::Approx(0.5 * (u / 2 + u * u / 3)).epsilon(1e-3));
    }
    CHECK(rep.max_errors.back() <= 1e-3);
    CHECK(rep.pass);
  }

  TEST_CASE("inverse stable moderate check at 1e8") {
    const auto bm = LevyModel::brownian(vec({0.0}), Matrix::Identity(1, 1));
    auto check = scgf_imm_md(0.5, bm.cumulant(), ScalingRegime::power(0.5));
    check.grid = scalar_grid({1.0});
    check.horizons = {1e4, 1e6, 1e8};
    check.tolerance = 2e-2;
    const auto rep = run_scgf_check(check);
    CHECK(rep.rows.back().limit == doctest::Approx(0.25));
    CHECK(std::abs(rep.rows.back().prelimit - 0.25) <= 2e-2);
    CHECK(rep.decreasing);
    CHECK(rep.pass);
  }

  TEST_CASE("non-finite prelimit is an error") {
    const auto gamma = SubordinatorModel::gamma(1.0, 1.0);
    const auto bm = LevyModel::brownian(vec({0.0}), Matrix::Identity(1, 1));
    auto check = scgf_levy_md(gamma, bm.cumulant(), ScalingRegime::power(0.5));
    check.grid = scalar_grid({10.0});
    check.horizons = {1.0, 4.0};  // 50 / sqrt(t) >= 1 leaves the clock domain
    CHECK_THROWS_AS(run_scgf_check(check), std::domain_error);
  }

  TEST_CASE("a schedule prefix reports the same errors at common horizons") {
    const auto cp = LevyModel::compound_poisson(1.0, MixtureLaw::gaussian(vec({0.3}), Matrix::Constant(1, 1, 0.5)));
    auto full = scgf_levy_md(SubordinatorModel::poisson(2.0), cp.cumulant(), ScalingRegime::power(0.3));
    full.grid = scalar_grid({-1.0, -0.5, 0.5, 1.0});
    full.horizons = {1e2, 1e3, 1e4, 1e5, 1e6};
    auto prefix = full;
    prefix.horizons.resize(4);
    const auto a = run_scgf_check(full);
    const auto b = run_scgf_check(prefix);
    for (std::size_t i = 0; i < b.max_errors.size(); ++i) CHECK(a.max_errors[i] == b.max_errors[i]);
    const bool common_pass = a.max_errors[3] <= full.tolerance;
    CHECK((b.max_errors.back() <= prefix.tolerance) == common_pass);
  }

  TEST_CASE("weak convergence: theta = 0 and the array limit") {
    const double lambda = 2.0;
    const auto n = static_cast<std::uint64_t>(1e4);
    const TriangularSummandModel summand(MixtureLaw::point_mass(vec({1.0})), lambda / 1e4);
    WeakConvergenceCheck check;
    check.sampler = [&](std::size_t m, std::uint64_t seed) {
      return generate_batch(m, 1, seed, [&](Engine& rng, Engine&) { return summand.sample_sum(n, rng); }, "array");
    };
    const double target = std::exp(lambda * std::expm1(0.3));
    CHECK(target == doctest::Approx(2.013184).epsilon(1e-6));
    check.target = [lambda](const Vector& th) { return std::exp(lambda * std::expm1(th(0))); };
    check.grid = scalar_grid({0.0, 0.3});
    const auto rep = run_weak_convergence(check, 77);
    CHECK(rep.rows[0].empirical == 1.0);
    CHECK(rep.rows[0].z == 0.0);
    CHECK(rep.rows[1].target == doctest::Approx(target));
    CHECK(std::abs(rep.rows[1].z) <= 4.0);
    CHECK(rep.pass);

    check.batch_size = 9999;
    CHECK_THROWS_AS(run_weak_convergence(check, 1), std::invalid_argument);
    check.batch_size = 10000;
    check.target = [](const Vector&) { return kInf; };
    CHECK_THROWS_AS(run_weak_convergence(check, 1), std::domain_error);
  }

  TEST_CASE("weak convergence of the skewed Rademacher sums") {
    const double delta = 0.6, c = std::sqrt(1 - delta * delta);
    const MixtureLaw rad = MixtureLaw::rademacher(2);
    const std::uint64_t n = 400;
    WeakConvergenceCheck check;
    check.sampler = [&](std::size_t m, std::uint64_t seed) {
      return generate_batch(
          m, 1, seed,
          [&](Engine& rng, Engine&) {
            const Vector x = rad.sample_sum(n, rng) / std::sqrt(double(n));
            return vec({c * x(0) + delta * std::abs(x(1))});
          },
          "skew rademacher");
    };
    // E exp(s c Z1) E exp(s delta |Z2|) in closed form
    auto target = [&](double s) {
      return std::exp(0.5 * s * s * c * c) * 2.0 * std::exp(0.5 * s * s * delta * delta) * normal_cdf(s * delta);
    };
    // quadrature target: Gauss-Hermite in z1 times exp-sinh quadrature in |z2|
    check.target = [&](const Vector& th) {
      const double smooth = gaussian_expectation([&](const Vector& z) { return std::exp(th(0) * c * z(0)); },
                                                 Vector::Zero(1), Matrix::Identity(1, 1), 40);
      return smooth * abs_normal_mgf(th(0) * delta);
    };
    for (double s : {-1.0, -0.5, 0.5, 1.0}) CHECK(check.target(vec({s})) == doctest::Approx(target(s)).epsilon(1e-12));
    check.grid = scalar_grid({-1.0, -0.5, 0.5, 1.0});
    const auto rep = run_weak_convergence(check, 78);
    CHECK(rep.max_abs_z <= 4.0);
    CHECK(rep.pass);
  }

  TEST_CASE("quadrature helpers") {
    for (double s : {-2.0, 0.0, 0.7, 3.0}) CHECK(abs_normal_mgf(s) == doctest::Approx(abs_normal_mgf_closed(s)).epsilon(1e-12));
    CHECK(normal_upper_tail(3.0) == doctest::Approx(0.5 * std::erfc(3.0 / std::numbers::sqrt2)).epsilon(1e-12));
    const auto rule = gauss_hermite(20);
    double m2 = 0.0, m4 = 0.0, w = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      w += rule.weights[i];
      m2 += rule.weights[i] * std::pow(rule.nodes[i], 2);
      m4 += rule.weights[i] * std::pow(rule.nodes[i], 4);
    }
    CHECK(w == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(m2 == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(m4 == doctest::Approx(3.0).epsilon(1e-13));
  }

  TEST_CASE("tail decay: whole space and binomial large deviations") {
    auto whole = binomial_ld_tail(0.5, 0.75, {100, 1000, 2000}, 0.01);
    whole.whole_space = true;
    whole.target = 0.0;
    const auto w = run_tail_decay(whole);
    for (const auto& r : w.rows) CHECK(r.decay == 0.0);
    CHECK(w.pass);

    const auto ld = run_tail_decay(binomial_ld_tail(0.5, 0.75, {500, 1000, 2000}, 0.01));
    CHECK(ld.target == doctest::Approx(-0.130812).epsilon(1e-5));
    CHECK(std::abs(ld.rows.back().decay - ld.target) <= 0.01);
    CHECK(ld.pass);
  }

  TEST_CASE("binomial tail and complement add to one") {
    for (auto [n, p] : std::vector<std::pair<std::uint64_t, double>>{{10, 0.3}, {2000, 0.5}, {100000, 0.01}, {7, 0.99}}) {
      for (double frac : {0.0, 0.1, 0.5, 0.75, 1.0}) {
        const auto k = static_cast<std::uint64_t>(frac * double(n));
        const auto t = binomial_log_tail(n, p, k);
        CAPTURE(n);
        CAPTURE(k);
        CHECK(std::abs(std::exp(t.log_upper) + std::exp(t.log_lower) - 1.0) <= 1e-12);
      }
    }
    // small case against the pmf
    const auto t = binomial_log_tail(5, 0.4, 4);
    const double direct = 5 * std::pow(0.4, 4) * 0.6 + std::pow(0.4, 5);
    CHECK(std::exp(t.log_upper) == doctest::Approx(direct).epsilon(1e-13));
    CHECK(binomial_log_tail(5, 0.4, 0).log_upper == 0.0);
    CHECK(binomial_log_tail(5, 0.4, 6).log_upper == -kInf);
  }

  TEST_CASE("tilted estimator on the Gaussian half line") {
    const MixtureLaw gauss = MixtureLaw::gaussian(vec({0.0}), Matrix::Identity(1, 1));
    const auto [tilt, target] = half_space_tilt(gauss, vec({1.0}), 3.0);
    CHECK(tilt(0) == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(target == doctest::Approx(-4.5).epsilon(1e-10));
    const auto est = tilted_tail_probability(gauss, vec({1.0}), 3.0, 1, tilt, 100000, 5);
    const double exact = normal_upper_tail(3.0);
    CHECK(std::abs(est.probability - exact) <= 3.0 * est.std_error);
    CHECK(est.std_error < 0.05 * exact);
  }

  TEST_CASE("zero probability without a tilt is reported") {
    TiltedTailCheck check{MixtureLaw::gaussian(vec({0.0}), Matrix::Identity(1, 1)), vec({1.0}), 1.0, {400, 800, 1600}};
    check.use_tilt = false;
    check.samples = 10000;
    const auto rep = run_tail_decay(check, 3);
    CHECK_FALSE(rep.pass);
    CHECK(rep.note.find("zero estimated probability") != std::string::npos);

    check.use_tilt = true;
    check.horizons = {50, 100, 200};
    check.tolerance = 0.05;
    const auto tilted = run_tail_decay(check, 3);
    CHECK(tilted.note.empty());
    CHECK(tilted.target == doctest::Approx(-0.5));
    CHECK(std::abs(tilted.rows.back().decay + 0.5) <= 0.05);
  }
}
