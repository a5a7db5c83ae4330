#include "relstable/sampler.hpp"

#include <cmath>
#include <numbers>

#include "relstable/errors.hpp"

namespace relstable {

namespace {

constexpr double kPi = std::numbers::pi;

double fast_log_kanter(double phi, double beta, double c) {
  if (phi < 1e-4) {
    // log A(0+) + beta phi^2 / 2
    return c * std::log(beta) + std::log1p(-beta) + 0.5 * beta * phi * phi;
  }
  return c * std::log(std::sin(beta * phi)) + std::log(std::sin((1.0 - beta) * phi)) -
         (c + 1.0) * std::log(std::sin(phi));
}

void check_step(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw InvalidParameter("time step must be positive, got " + std::to_string(dt));
  }
}

}  // namespace

double stable_from_uniforms(double dt, double beta, double angle, double w) {
  check_step(dt);
  if (!(beta > 0.0 && beta < 1.0)) throw DomainError("beta must lie in (0,1)");
  if (!(angle > 0.0 && angle < kPi)) throw DomainError("angle must lie in (0, pi)");
  if (!(w > 0.0)) throw DomainError("exponential variate must be positive");
  const double c = beta / (1.0 - beta);
  const double e = (1.0 - beta) / beta;
  return std::pow(dt, 1.0 / beta) * std::exp(e * (fast_log_kanter(angle, beta, c) - std::log(w)));
}

IncrementSampler::IncrementSampler(double dt, const ProcessParams& params,
                                   double acceptance_floor)
    : dt_(dt), params_(params) {
  check_step(dt);
  scale_ = std::pow(dt, 1.0 / params.beta);
  exponent_ = (1.0 - params.beta) / params.beta;
  c_ = params.beta / (1.0 - params.beta);
  tilt_ = params.tilt();
  const double rate = std::exp(-params.m * dt);
  if (rate < acceptance_floor) {
    throw StepTooLarge("tempering acceptance rate e^{-m dt} = " + std::to_string(rate) +
                       " is below the floor " + std::to_string(acceptance_floor) +
                       "; use a smaller dt");
  }
}

double IncrementSampler::stable(RngStream& rng) const {
  const double angle = kPi * rng.uniform();
  const double w = rng.exponential();
  return scale_ * std::exp(exponent_ * (fast_log_kanter(angle, params_.beta, c_) - std::log(w)));
}

TemperedDraw IncrementSampler::tempered(RngStream& rng) const {
  TemperedDraw draw;
  while (true) {
    const double u = stable(rng);
    ++draw.proposals;
    if (tilt_ == 0.0 || rng.uniform() < std::exp(-tilt_ * u)) {
      draw.value = u;
      return draw;
    }
  }
}

void IncrementSampler::increment(RngStream& rng, std::span<double> out) const {
  const double u = tempered(rng).value;
  gaussian_leg(u, rng, out);
}

double sample_stable_subordinator(double dt, double beta, RngStream& rng) {
  const auto params = ProcessParams::make(2.0 * beta, 0.0, 2);
  return IncrementSampler(dt, params).stable(rng);
}

TemperedDraw sample_tempered_subordinator_counted(double dt, const ProcessParams& params,
                                                  RngStream& rng, double acceptance_floor) {
  return IncrementSampler(dt, params, acceptance_floor).tempered(rng);
}

double sample_tempered_subordinator(double dt, const ProcessParams& params, RngStream& rng,
                                    double acceptance_floor) {
  return sample_tempered_subordinator_counted(dt, params, rng, acceptance_floor).value;
}

void gaussian_leg(double u, RngStream& rng, std::span<double> out) {
  const double sd = std::sqrt(2.0 * u);
  for (double& x : out) x = sd * rng.normal();
}

Point sample_increment(double dt, const ProcessParams& params, RngStream& rng) {
  Point out(static_cast<std::size_t>(params.d));
  IncrementSampler(dt, params).increment(rng, out);
  return out;
}

PathGrid simulate_path(const Point& start, double horizon, double dt,
                       const ProcessParams& params, RngStream& rng) {
  check_step(dt);
  if (!(horizon >= dt)) throw InvalidParameter("horizon must be >= dt");
  if (start.size() != static_cast<std::size_t>(params.d)) {
    throw InvalidParameter("start point dimension does not match d");
  }
  const IncrementSampler sampler(dt, params);
  const auto steps = static_cast<std::size_t>(std::floor(horizon / dt * (1.0 + 1e-12)));
  PathGrid path;
  path.start = start;
  path.dt = dt;
  path.horizon = horizon;
  path.positions.reserve(steps + 1);
  path.positions.push_back(start);
  Point inc(start.size());
  for (std::size_t k = 0; k < steps; ++k) {
    sampler.increment(rng, inc);
    Point next = path.positions.back();
    for (std::size_t i = 0; i < next.size(); ++i) next[i] += inc[i];
    path.positions.push_back(std::move(next));
  }
  return path;
}

}  // namespace relstable
