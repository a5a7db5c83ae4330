#include <doctest.h>

#include <cmath>
#include <numbers>

#include "relstable/errors.hpp"
#include "relstable/kernels.hpp"
#include "relstable/sampler.hpp"
#include "relstable/stats.hpp"
#include "relstable/tracelab.hpp"

using namespace relstable;
using std::numbers::pi;

namespace {

PathGrid grid_of(std::vector<Point> positions) {
  PathGrid g;
  g.start = positions.front();
  g.dt = 0.1;
  g.horizon = 0.1 * static_cast<double>(positions.size() - 1);
  g.positions = std::move(positions);
  return g;
}

bool within(const TraceEstimate& e, double target, double z) {
  return std::abs(e.value - target) <= z * e.std_error;
}

}  // namespace

TEST_CASE("first exit on a grid") {
  const Domain ball = Domain::ball(2, 1.0);
  const ExitEvent none = first_exit(grid_of({{0, 0}, {0.5, 0}, {0.2, 0.3}}), ball);
  CHECK_FALSE(none.step.has_value());
  CHECK_FALSE(none.position.has_value());
  const ExitEvent e = first_exit(grid_of({{0, 0}, {0.5, 0}, {0.9, 0}, {1.2, 0}, {0, 0}}), ball);
  REQUIRE(e.step.has_value());
  CHECK(*e.step == 3);
  CHECK((*e.position)[0] == doctest::Approx(1.2));
}

TEST_CASE("finer monitoring never delays the exit") {
  const Domain ball = Domain::ball(2, 1.0);
  const auto p = ProcessParams::make(1.0, 0.0, 2);
  const double t = 0.5, dt = t / 64;
  RngStream rng(21, 0);
  RunningStats fine, mid, coarse;
  for (int i = 0; i < 4000; ++i) {
    const PathGrid g = simulate_path({0.6, 0.0}, t, dt, p, rng);
    for (int stride : {1, 2, 4}) {
      double tau = t;
      for (std::size_t k = static_cast<std::size_t>(stride); k < g.positions.size(); k += stride) {
        if (!ball.contains(g.positions[k])) {
          tau = static_cast<double>(k) * dt;
          break;
        }
      }
      (stride == 1 ? fine : stride == 2 ? mid : coarse).add(tau);
    }
  }
  CHECK(fine.mean() <= mid.mean() + 3 * mid.std_error());
  CHECK(mid.mean() <= coarse.mean() + 3 * coarse.std_error());
}

TEST_CASE("fine step count") {
  CHECK(fine_steps(1.0, 1.0 / 256, 3) == 256);
  CHECK(fine_steps(1.0, 0.3, 3) % 4 == 0);
  CHECK(fine_steps(1.0, 0.3, 1) == 4);
}

TEST_CASE("kernel bank uses midpoint exit times") {
  const auto p = ProcessParams::make(1.0, 1.0, 2);
  const KernelBank bank(0.4, 16, 3, p);
  CHECK(bank.dt() == doctest::Approx(0.025));
  CHECK(bank.eval(0, 1, 0.2) == doctest::Approx(free_density(0.4 - 0.0125, 0.2, p)).epsilon(1e-4));
  CHECK(bank.eval(2, 2, 0.2) == doctest::Approx(free_density(0.4 - 1.5 * 0.1, 0.2, p)).epsilon(1e-4));
}

TEST_CASE("r_D estimator") {
  const auto p = ProcessParams::make(1.0, 1.0, 2);
  const Domain ball = Domain::ball(2, 1.0);
  RunOptions opts;
  SUBCASE("no boundary gives zero") {
    const auto e = r_estimate(0.2, {0.0, 0.0}, Domain::whole_space(2), 200, 0.01, RngStream(1, 0), p);
    CHECK(e.value == 0.0);
    CHECK(e.std_error == 0.0);
  }
  SUBCASE("preconditions") {
    CHECK_THROWS_AS(r_estimate(0.2, {0.0, 0.0}, ball, 50, 0.01, RngStream(1, 0), p), PreconditionError);
    CHECK_THROWS_AS(r_estimate(0.2, {2.0, 0.0}, ball, 500, 0.01, RngStream(1, 0), p), PreconditionError);
  }
  SUBCASE("bounded by p(t,0) and larger near the boundary") {
    const double t = 0.02;
    const auto centre = r_estimate(t, {0.0, 0.0}, ball, 4000, t / 64, RngStream(2, 0), p);
    const auto edge = r_estimate(t, {0.9, 0.0}, ball, 4000, t / 64, RngStream(2, 1), p);
    CHECK(edge.value <= free_density(t, 0.0, p) + 3 * edge.std_error);
    CHECK(centre.value + 3 * centre.std_error < edge.value - 3 * edge.std_error);
  }
  SUBCASE("independent of the worker count") {
    RunOptions many;
    many.workers = 3;
    const auto a = r_estimate(0.05, {0.5, 0.1}, ball, 1000, 0.05 / 64, RngStream(3, 0), p, opts);
    const auto b = r_estimate(0.05, {0.5, 0.1}, ball, 1000, 0.05 / 64, RngStream(3, 0), p, many);
    CHECK(a.value == b.value);
    CHECK(a.std_error == b.std_error);
  }
}

TEST_CASE("half-space profile") {
  const auto p0 = ProcessParams::make(1.0, 0.0, 2);
  const std::size_t n = 6000;
  SUBCASE("agrees with the point estimator") {
    const double t = 0.3, q = 0.2;
    const auto prof = halfspace_profile(t, {q}, n, t / 64, RngStream(4, 0), p0);
    const auto pt = r_estimate(t, {q, 0.0}, Domain::halfspace(2), n, t / 64, RngStream(4, 1), p0);
    CHECK(agree(prof.f_values[0], pt, 3.0));
  }
  SUBCASE("stable scaling") {
    const double t = 0.25;
    const auto a = halfspace_profile(t, {0.25}, n, t / 64, RngStream(5, 0), p0);
    const auto b = halfspace_profile(1.0, {1.0}, n, 1.0 / 64, RngStream(5, 1), p0);
    const double f = std::pow(t, -2.0);
    const double se = std::hypot(a.f_values[0].std_error, f * b.f_values[0].std_error);
    CHECK(std::abs(a.f_values[0].value - f * b.f_values[0].value) <= 3 * se);
  }
  SUBCASE("the mass only lowers the profile by the tempering factor") {
    const auto p1 = ProcessParams::make(1.0, 1.0, 2);
    const double t = 0.2;
    const auto m = halfspace_profile(t, {0.1}, n, t / 64, RngStream(6, 0), p1);
    const auto s = halfspace_profile(t, {0.1}, n, t / 64, RngStream(6, 1), p0);
    const double bound = std::exp(2 * t) * s.f_values[0].value;
    const double se = std::hypot(m.f_values[0].std_error, std::exp(2 * t) * s.f_values[0].std_error);
    CHECK(m.f_values[0].value <= bound + 3 * se);
  }
}

TEST_CASE("q grid") {
  const auto p = ProcessParams::make(1.0, 0.0, 2);
  const auto g = halfspace_q_grid(0.04, p, 0.5, 8);
  CHECK(g.front() == doctest::Approx(0.0004));
  CHECK(g.back() == doctest::Approx(3.0));
  CHECK(std::find_if(g.begin(), g.end(), [](double q) { return std::abs(q - 0.5) < 1e-12; }) != g.end());
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
}

TEST_CASE("second-term constants") {
  const auto p0 = ProcessParams::make(1.0, 0.0, 2);
  const auto p1 = ProcessParams::make(1.0, 1.0, 2);
  const std::size_t n = 3000;
  const auto c4 = c4_const(n, 1.0 / 64, RngStream(7, 0), p0);
  CHECK(c4.value > 0.0);
  const double t = 0.5;
  const auto c2 = c2_of_t(t, n, t / 64, RngStream(7, 1), p1);
  CHECK(c2.value >= 0.0);
  const double bound = c4.value * std::exp(2 * t) * std::pow(t, -1.0);
  CHECK(c2.value <= bound + 3 * std::hypot(c2.std_error, std::exp(2 * t) / t * c4.std_error));
  // At m = 0, C2(t) t^{(d-1)/alpha} is C4.
  const auto c2s = c2_of_t(t, n, t / 64, RngStream(7, 2), p0);
  CHECK(std::abs(c2s.value * t - c4.value) <= 3 * std::hypot(t * c2s.std_error, c4.std_error));
}

TEST_CASE("C4 regression fixture") {
  // Frozen from a 2e5-path run at dt = 1/256 (d = 2, alpha = 1), with its
  // standard error and extrapolation bias budget.
  const double fixture = 0.05049794, fixture_se = 0.00005504, fixture_bias = 0.00018136;
  const auto p0 = ProcessParams::make(1.0, 0.0, 2);
  const auto c4 = c4_const(4000, 1.0 / 128, RngStream(12, 0), p0);
  const double se = std::hypot(c4.std_error, fixture_se);
  CHECK(std::abs(c4.value - fixture) <= 3 * se + fixture_bias + std::abs(c4.bias));
}

TEST_CASE("heat trace") {
  const auto p = ProcessParams::make(1.0, 1.0, 2);
  const Domain ball = Domain::ball(2, 1.0);
  SpatialBudget budget;
  budget.n_x = 3000;
  std::vector<TraceEstimate> zs;
  for (double t : {0.02, 0.05, 0.1}) {
    zs.push_back(z_trace(t, ball, budget, RngStream(8, static_cast<std::uint64_t>(t * 1000)), p));
    const auto& z = zs.back();
    const double first = c1_of_t(t, p) * std::exp(t) * pi / (t * t);
    CHECK(z.value <= first + 3 * z.std_error);
    CHECK(z.value > 0.0);
  }
  CHECK(zs[0].value > zs[1].value);
  CHECK(zs[1].value > zs[2].value);
  const double norm = 0.02 * 0.02 * std::exp(-0.02) * zs[0].value;
  CHECK(norm == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("strata") {
  const auto p = ProcessParams::make(1.0, 0.0, 2);
  const auto s = trace_strata(0.01, Domain::ball(2, 1.0), p);
  CHECK(s.front() == 0.0);
  CHECK(s.back() == doctest::Approx(1.0));
  for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i] > s[i - 1]);
}

TEST_CASE("residual scan") {
  const auto p = ProcessParams::make(1.0, 1.0, 2);
  ResidualBudget b;
  b.spatial.n_x = 6000;
  b.profile_paths = 1500;
  b.profile_per_decade = 4;
  const auto rep = residual_scan({0.04, 0.08}, Domain::ball(2, 1.0), b, RngStream(9, 0), p);
  REQUIRE(rep.rows.size() == 2);
  for (const auto& r : rep.rows) {
    CHECK(r.rho >= 0.0);
    CHECK(std::isfinite(r.rho));
    CHECK(r.z.value <= r.first_term + 3 * r.z.std_error);
  }
  CHECK(std::isfinite(rep.slope));
  CHECK_THROWS_AS(residual_scan({0.6}, Domain::ball(2, 1.0), b, RngStream(9, 0), p), PreconditionError);
}

TEST_CASE("principal eigenvalue") {
  const auto p = ProcessParams::make(1.0, 0.0, 2);
  SpatialBudget b;
  b.n_x = 3000;
  b.dt = 1.0 / 64;
  const auto small = lambda1_estimate(Domain::ball(2, 1.0), {1.0, 1.5, 2.0}, b, RngStream(10, 0), p);
  SpatialBudget b2 = b;
  b2.dt = 2.0 / 64;
  const auto large = lambda1_estimate(Domain::ball(2, 2.0), {2.0, 3.0, 4.0}, b2, RngStream(10, 1), p);
  CHECK(small.lambda1.value > 0.0);
  const double se = std::hypot(small.lambda1.std_error, large.lambda1.std_error);
  CHECK(small.lambda1.value - large.lambda1.value > 3 * se);
  const double se_half = std::hypot(0.5 * small.lambda1.std_error, large.lambda1.std_error);
  CHECK(std::abs(large.lambda1.value - 0.5 * small.lambda1.value) <= 3 * se_half);
  CHECK_THROWS_AS(lambda1_estimate(Domain::ball(2, 1.0), {1.0}, b, RngStream(10, 0), p), PreconditionError);
}

TEST_CASE("comparison with the stable process") {
  const auto p = ProcessParams::make(1.0, 1.0, 2);
  const Domain ball = Domain::ball(2, 1.0);
  const auto rep = comparison_check(0.1, {{0.0, 0.0}, {0.7, 0.0}}, ball, 2000, 0.1 / 64, RngStream(11, 0), p);
  CHECK_FALSE(rep.any_violation());
  const auto p0 = ProcessParams::make(1.0, 0.0, 2);
  const auto same = comparison_check(0.1, {{0.7, 0.0}}, ball, 2000, 0.1 / 64, RngStream(11, 1), p0);
  const auto& row = same.rows[0];
  CHECK(std::abs(row.r_mass.value - row.r_stable.value) <=
        3 * std::hypot(row.r_mass.std_error, row.r_stable.std_error));
}

TEST_CASE("estimate helpers") {
  TraceEstimate a, b;
  a.value = 1.0;
  a.std_error = 0.1;
  b.value = 1.5;
  b.std_error = 0.1;
  CHECK(agree(a, b, 4.0));
  CHECK_FALSE(agree(a, b, 3.0));
  CHECK(a.lower(2.0) == doctest::Approx(0.8));
  CHECK(within(a, 1.05, 1.0));
}
