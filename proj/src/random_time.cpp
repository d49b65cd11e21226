#include "ncmd/random_time.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ncmd {

InverseStableModel::InverseStableModel(double nu) : nu_(nu) {
  if (!(nu > 0.0 && nu < 1.0)) throw std::invalid_argument("InverseStableModel: nu must lie in (0,1)");
}

double InverseStableModel::sample(double t, Engine& rng) const {
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("InverseStableModel::sample: t must be finite and >= 0");
  if (t == 0.0) return 0.0;
  // (t/D)^nu evaluated through logs so that tiny stable draws do not overflow
  const double d = sample_positive_stable(nu_, rng);
  return std::exp(nu_ * (std::log(t) - std::log(d)));
}

double InverseStableModel::mean(double t) const { return std::pow(t, nu_) / std::tgamma(nu_ + 1.0); }

std::string InverseStableModel::describe() const {
  std::ostringstream os;
  os << "inverse_stable(nu=" << nu_ << ")";
  return os.str();
}

ScalingRegime ScalingRegime::power(double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("ScalingRegime::power: beta must lie in (0,1)");
  return {Family::Power, beta, std::nullopt};
}

double ScalingRegime::a(double t) const {
  switch (family) {
    case Family::Unit: return 1.0;
    case Family::Power: return std::pow(t, -beta);
    case Family::Inverse: return 1.0 / t;
  }
  throw std::logic_error("ScalingRegime::a: unknown family");
}

std::string ScalingRegime::describe() const {
  std::ostringstream os;
  switch (family) {
    case Family::Unit: os << "a_t=1"; break;
    case Family::Power: os << "a_t=t^-" << beta; break;
    case Family::Inverse: os << "a_t=1/t"; break;
  }
  if (alpha) os << ", alpha=" << *alpha;
  return os.str();
}

double alpha_exponent(double nu, bool driftless) {
  if (!(nu > 0.0 && nu < 1.0)) throw std::invalid_argument("alpha_exponent: nu must lie in (0,1)");
  return driftless ? 1.0 - nu / 2.0 : 1.0 - nu;
}

SampleBatch sample_inverse_stable(const InverseStableModel& model, double t, std::size_t n, std::uint64_t seed) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("sample_inverse_stable: t must be finite and >= 0");
  return generate_batch(
      n, 1, seed, [&model, t](Engine&, Engine& clock) { return Vector::Constant(1, model.sample(t, clock)); },
      model.describe());
}

SampleBatch sample_time_changed(const LevyModel& levy, const Clock& clock, double t, const ScalingRegime& scaling,
                                std::size_t n, std::uint64_t seed) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("sample_time_changed: t must be finite and >= 0");
  const std::size_t h = levy.dim();
  const std::string source = levy.describe() + " o " +
                             std::visit([](const auto& c) { return c.describe(); }, clock) + ", " + scaling.describe();

  if (t == 0.0) {
    return generate_batch(
        n, h, seed, [h](Engine&, Engine&) { return Vector::Zero(static_cast<Eigen::Index>(h)).eval(); }, source);
  }
  const double at = scaling.a(t);

  if (const auto* inv = std::get_if<InverseStableModel>(&clock)) {
    const double natural = alpha_exponent(inv->nu(), levy.driftless());
    if (scaling.alpha && std::fabs(*scaling.alpha - natural) > 1e-12)
      throw std::invalid_argument("sample_time_changed: alpha does not match the driver (expected " +
                                  std::to_string(natural) + ")");
    const double factor = std::pow(at * t, natural) / t;
    return generate_batch(
        n, h, seed,
        [&levy, inv, t, factor](Engine& driver, Engine& clk) {
          const double l = inv->sample(t, clk);
          return (factor * levy.sample(l, driver)).eval();
        },
        source);
  }

  const auto& sub = std::get<SubordinatorModel>(clock);
  if (scaling.alpha) throw std::invalid_argument("sample_time_changed: alpha applies to inverse-stable clocks only");
  if (sub.kind() == SubordinatorModel::Kind::StableDriftFree)
    throw std::invalid_argument("sample_time_changed: a subordinator clock needs a finite mean rate");
  const double inner = 1.0 / (t * at);
  return generate_batch(
      n, h, seed,
      [&levy, &sub, t, at, inner](Engine& driver, Engine& clk) {
        const double v = sub.sample(t, clk);
        return (at * levy.sample(v * inner, driver)).eval();
      },
      source);
}

}  // namespace ncmd
