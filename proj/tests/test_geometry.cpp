#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "relstable/errors.hpp"
#include "relstable/geometry.hpp"
#include "relstable/specfun.hpp"

using namespace relstable;
using std::numbers::pi;

TEST_CASE("distance to the boundary") {
  const Domain ball = Domain::ball(2, 1.0);
  CHECK(ball.delta(Point{0.0, 0.0}) == doctest::Approx(1.0));
  CHECK(ball.delta(Point{0.3, 0.4}) == doctest::Approx(0.5));
  CHECK(ball.contains(Point{0.3, 0.4}));
  CHECK_FALSE(ball.contains(Point{1.0, 0.1}));
  const Domain ann = Domain::annulus(3, 1.0, 3.0);
  CHECK(ann.delta(Point{2.0, 0.0, 0.0}) == doctest::Approx(1.0));
  CHECK(ann.delta(Point{0.0, 1.2, 0.0}) == doctest::Approx(0.2));
  CHECK_FALSE(ann.contains(Point{0.5, 0.0, 0.0}));
  const Domain h = Domain::halfspace(2);
  CHECK(h.delta(Point{0.7, -5.0}) == doctest::Approx(0.7));
  CHECK_FALSE(h.contains(Point{-0.1, 0.0}));
  const Domain shifted = Domain::ball(2, 2.0, {1.0, 1.0});
  CHECK(shifted.delta(Point{1.0, 2.0}) == doctest::Approx(1.0));
}

TEST_CASE("volumes, areas and smoothness radius") {
  CHECK(Domain::ball(2, 1.0).volume() == doctest::Approx(pi));
  CHECK(Domain::ball(3, 2.0).volume() == doctest::Approx(4.0 / 3.0 * pi * 8.0));
  CHECK(Domain::ball(3, 1.0).surface() == doctest::Approx(4 * pi));
  const Domain ann = Domain::annulus(2, 1.0, 3.0);
  CHECK(ann.volume() == doctest::Approx(8 * pi));
  CHECK(ann.surface() == doctest::Approx(8 * pi));
  CHECK(ann.smoothness_radius() == doctest::Approx(1.0));
  CHECK(Domain::annulus(2, 1.0, 1.5).smoothness_radius() == doctest::Approx(0.25));
  CHECK(ann.max_delta() == doctest::Approx(1.0));
  CHECK_FALSE(Domain::halfspace(2).bounded());
  CHECK(std::isinf(Domain::whole_space(2).delta(Point{3.0, 4.0})));
}

TEST_CASE("boundary layer areas") {
  for (int d : {2, 3, 4}) {
    CHECK(Domain::ball(d, 1.0).layer_area(0.0) == doctest::Approx(surface_area(d)));
  }
  CHECK(Domain::ball(2, 1.0).layer_area(0.5) == doctest::Approx(pi));
  CHECK_THROWS_AS(Domain::ball(2, 1.0).layer_area(1.5), DomainError);
  CHECK_THROWS_AS(Domain::halfspace(2).layer_area(0.1), DomainError);

  std::mt19937_64 gen(3);
  for (int d : {2, 3}) {
    for (const Domain& dom : {Domain::ball(d, 1.0), Domain::annulus(d, 1.0, 3.0)}) {
      const double R = dom.smoothness_radius();
      const double area = dom.surface();
      std::uniform_real_distribution<double> unif(0.0, R);
      for (int i = 0; i < 20; ++i) {
        const double q = unif(gen);
        const double aq = dom.layer_area(q);
        CHECK(std::pow((R - q) / R, d - 1) * area <= aq * (1 + 1e-12));
        CHECK(aq <= std::pow(R / (R - q), d - 1) * area * (1 + 1e-12));
      }
      CHECK(area <= std::pow(2.0, d) * dom.volume() / R);
    }
  }
}

TEST_CASE("layer volume is the integral of the level-set area") {
  const Domain ann = Domain::annulus(3, 1.0, 3.0);
  const double lo = 0.1, hi = 0.7;
  const int n = 2000;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += ann.level_set_area(lo + (i + 0.5) * (hi - lo) / n);
  CHECK(ann.layer_volume(lo, hi) == doctest::Approx(s * (hi - lo) / n).epsilon(1e-6));
  CHECK(ann.layer_volume(0.0, 5.0) == doctest::Approx(ann.volume()).epsilon(1e-12));
}

TEST_CASE("uniform and layer sampling") {
  RngStream rng(1, 0);
  for (int d : {2, 3}) {
    const Domain ball = Domain::ball(d, 1.0);
    const int n = 100000;
    int deep = 0;
    bool inside = true;
    for (int i = 0; i < n; ++i) {
      const Point x = ball.sample_uniform(rng);
      inside = inside && ball.contains(x);
      deep += ball.delta(x) >= 0.5 ? 1 : 0;
    }
    CHECK(inside);
    const double p = std::pow(0.5, d);
    CHECK(std::abs(static_cast<double>(deep) / n - p) < 4 * std::sqrt(p * (1 - p) / n));
  }
  const Domain ann = Domain::annulus(2, 1.0, 3.0);
  for (int i = 0; i < 2000; ++i) {
    const Point x = ann.sample_layer(0.2, 0.3, rng);
    const double q = ann.delta(x);
    CHECK((q >= 0.2 && q < 0.3));
  }
  CHECK_THROWS_AS(ann.sample_layer(2.0, 3.0, rng), DomainError);
}

TEST_CASE("inward normal") {
  const Domain ball = Domain::ball(2, 1.0);
  const Point n = ball.inward_normal(Point{0.0, 0.9});
  CHECK(n[0] == doctest::Approx(0.0));
  CHECK(n[1] == doctest::Approx(-1.0));
  const Domain ann = Domain::annulus(2, 1.0, 3.0);
  const Point m = ann.inward_normal(Point{1.2, 0.0});
  CHECK(m[0] == doctest::Approx(1.0));
}

TEST_CASE("domain strings") {
  CHECK(parse_domain("ball:R0=1", 2).describe() == "ball:R0=1");
  CHECK(parse_domain("BALL:r0=2.5", 3).volume() == doctest::Approx(4.0 / 3.0 * pi * 15.625));
  const Domain a = parse_domain("annulus:rin=1,rout=3", 2);
  CHECK(a.volume() == doctest::Approx(8 * pi));
  CHECK_FALSE(parse_domain("HalfSpace", 2).bounded());
  CHECK_THROWS_AS(parse_domain("ball:R1=1", 2), InvalidParameter);
  CHECK_THROWS_AS(parse_domain("cube", 2), InvalidParameter);
  CHECK_THROWS_AS(parse_domain("annulus:rin=3,rout=1", 2), InvalidParameter);
}
