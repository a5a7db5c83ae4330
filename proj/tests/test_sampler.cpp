#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "relstable/errors.hpp"
#include "relstable/rng.hpp"
#include "relstable/sampler.hpp"
#include "relstable/stats.hpp"
#include "relstable/verify.hpp"

using namespace relstable;
using std::numbers::pi;

TEST_CASE("random streams") {
  RngStream a(1, 2), b(1, 2), c(1, 3);
  const double x = a.uniform();
  CHECK(x == b.uniform());
  CHECK(x != c.uniform());
  RngStream s = RngStream(1, 2).substream(5);
  RngStream t = RngStream(1, 2).substream(5);
  CHECK(s.normal() == t.normal());
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    CHECK((u > 0.0 && u < 1.0));
  }
}

TEST_CASE("Kanter map by hand") {
  CHECK(stable_from_uniforms(1.0, 0.5, pi / 2, 1.0) == doctest::Approx(0.5).epsilon(1e-14));
  // dt scaling under the same randomness.
  const double one = stable_from_uniforms(1.0, 0.7, 1.2, 0.4);
  CHECK(stable_from_uniforms(0.3, 0.7, 1.2, 0.4) == doctest::Approx(std::pow(0.3, 1 / 0.7) * one).epsilon(1e-13));
}

TEST_CASE("stable subordinator Laplace transform") {
  int stream = 0;
  for (double beta : {0.5, 0.75}) {
    for (const auto& row :
         laplace_sampler_test(beta, 0.7, {0.5, 1.0, 2.0}, 200000, RngStream(11, stream++), 1, 4.0)) {
      CHECK_MESSAGE(row.pass, "beta=", row.beta, " lambda=", row.lambda, " mean=", row.mean,
                    " target=", row.target, " se=", row.se);
    }
  }
}

TEST_CASE("tempered sampler") {
  SUBCASE("m = 0 draws coincide with the stable sampler") {
    const auto p = ProcessParams::make(1.0, 0.0, 2);
    RngStream a(3, 0), b(3, 0);
    for (int i = 0; i < 100; ++i) {
      const auto d = sample_tempered_subordinator_counted(0.2, p, a);
      CHECK(d.proposals == 1);
      CHECK(d.value == sample_stable_subordinator(0.2, 0.5, b));
    }
  }
  SUBCASE("acceptance rate and mean") {
    const auto p = ProcessParams::make(1.0, 1.0, 2);
    const AcceptanceRow row = acceptance_test(p, 0.1, 100000, RngStream(4, 0), 1, 4.0);
    CHECK(row.target == doctest::Approx(0.904837).epsilon(1e-6));
    CHECK_MESSAGE(row.pass, "rate=", row.rate, " mean=", row.mean);
  }
  SUBCASE("step too large for the rejection sampler") {
    const auto p = ProcessParams::make(1.0, 100.0, 2);
    RngStream r(1, 1);
    CHECK_THROWS_AS(sample_tempered_subordinator(1.0, p, r), StepTooLarge);
  }
}

TEST_CASE("increment characteristic function") {
  for (auto [alpha, m] : {std::pair{1.0, 0.0}, std::pair{1.0, 1.0}, std::pair{1.5, 0.5}}) {
    const auto p = ProcessParams::make(alpha, m, 2);
    for (const auto& row : charfn_test(p, 0.1, {0.5, 1.0, 2.0}, 200000, RngStream(5, 0), 1, 4.0)) {
      CHECK_MESSAGE(row.pass, "alpha=", alpha, " m=", m, " xi=", row.xi, " re=", row.re,
                    " target=", row.target);
    }
  }
}

TEST_CASE("Cauchy increments and symmetry") {
  const auto p = ProcessParams::make(1.0, 0.0, 2);
  const double dt = 0.3;
  IncrementSampler sampler(dt, p);
  RngStream rng(6, 0);
  const int n = 100000;
  std::vector<double> abs_first(n);
  RunningStats mean_x, mean_y;
  Point x(2);
  int below = 0;
  for (int i = 0; i < n; ++i) {
    sampler.increment(rng, x);
    abs_first[i] = std::abs(x[0]);
    below += abs_first[i] < dt ? 1 : 0;
    // Bounded transform keeps the variance finite.
    mean_x.add(std::atan(x[0]));
    mean_y.add(std::atan(x[1]));
  }
  // P(|C| < dt) = 1/2 for a Cauchy law of scale dt.
  const double frac = static_cast<double>(below) / n;
  CHECK(std::abs(frac - 0.5) < 4 * std::sqrt(0.25 / n));
  CHECK(std::abs(mean_x.mean()) < 4 * mean_x.std_error());
  CHECK(std::abs(mean_y.mean()) < 4 * mean_y.std_error());
}

TEST_CASE("path grid") {
  const auto p = ProcessParams::make(1.0, 1.0, 2);
  RngStream a(8, 0);
  const PathGrid one = simulate_path({0.0, 0.0}, 0.1, 0.1, p, a);
  CHECK(one.positions.size() == 2);
  CHECK(one.positions[0] == Point{0.0, 0.0});
  const PathGrid g1 = simulate_path({0.1, 0.2}, 1.0, 0.05, p, a);
  RngStream a2(8, 0);
  simulate_path({0.0, 0.0}, 0.1, 0.1, p, a2);
  const PathGrid g2 = simulate_path({0.1, 0.2}, 1.0, 0.05, p, a2);
  CHECK(g1.positions == g2.positions);

  // positions[4] has the law of one increment over 4 dt.
  const double dt = 0.05, xi = 1.0;
  RunningStats re;
  RngStream r(9, 0);
  for (int i = 0; i < 100000; ++i) {
    const PathGrid g = simulate_path({0.0, 0.0}, 4 * dt, dt, p, r);
    re.add(std::cos(xi * g.positions[4][0]));
  }
  const double target = std::exp(-4 * dt * (std::sqrt(1.0 + xi * xi) - 1.0));
  CHECK(std::abs(re.mean() - target) < 4 * re.std_error());
}

TEST_CASE("running statistics merge") {
  RunningStats all, a, b;
  for (int i = 0; i < 100; ++i) {
    const double v = std::sin(i * 1.3);
    all.add(v);
    (i < 37 ? a : b).add(v);
  }
  a.merge(b);
  CHECK(a.count() == all.count());
  CHECK(a.mean() == doctest::Approx(all.mean()).epsilon(1e-13));
  CHECK(a.variance() == doctest::Approx(all.variance()).epsilon(1e-12));
}
