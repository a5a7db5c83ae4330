#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "relstable/errors.hpp"
#include "relstable/specfun.hpp"

using namespace relstable;
using std::numbers::pi;

TEST_CASE("sphere area closed forms") {
  CHECK(surface_area(2) == doctest::Approx(2 * pi).epsilon(1e-14));
  CHECK(surface_area(3) == doctest::Approx(4 * pi).epsilon(1e-14));
  CHECK(surface_area(4) == doctest::Approx(2 * pi * pi).epsilon(1e-14));
}

TEST_CASE("gamma rejects arguments outside its range") {
  CHECK_THROWS_AS(gamma_fn(0.0), InvalidParameter);
  CHECK_THROWS_AS(gamma_fn(60.0), InvalidParameter);
  CHECK(gamma_fn(5.0) == doctest::Approx(24.0).epsilon(1e-14));
}

TEST_CASE("psi integral") {
  CHECK(psi(0.0, 1.5) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(psi(1.0, 1.5) == doctest::Approx(2.0).epsilon(1e-10));
  for (double p : {0.75, 1.25, 2.0, 2.5}) {
    CHECK(psi(0.0, p) == doctest::Approx(std::pow(2.0, 0.5 - p) * std::tgamma(2 * p)).epsilon(1e-9));
  }
  // Direct Simpson oracle on a truncated range for a nonzero theta.
  const double p = 1.25, theta = 0.7;
  const double ref = oracle::simpson(
      [&](double v) {
        if (v == 0.0) return 0.0;
        return std::exp(-v) * std::pow(v, p - 0.5) * std::pow(theta + v / 2, p - 0.5);
      },
      0.0, 60.0, 200000);
  CHECK(psi(theta, p) == doctest::Approx(ref).epsilon(1e-6));
}

TEST_CASE("Riesz constant A(v, d)") {
  // A(-1, 2) = Gamma(3/2) / (pi 2^{-1} Gamma(-1/2)) in absolute value.
  CHECK(a_const(-1.0, 2) == doctest::Approx(1.0 / (2 * pi)).epsilon(1e-12));
  CHECK(a_const(-1.0, 3) == doctest::Approx(1.0 / (pi * pi)).epsilon(1e-12));
  CHECK_THROWS(a_const(0.0, 3));
  CHECK_THROWS(a_const(-2.0, 3));
}

TEST_CASE("Levy density reduces to the stable one at m = 0") {
  const auto p = ProcessParams::make(1.0, 0.0, 2);
  for (double r : {0.1, 1.0, 3.0}) {
    CHECK(levy_density_radial(r, p) == doctest::Approx(stable_levy_density_radial(r, p)).epsilon(1e-10));
  }
  CHECK(stable_levy_density_radial(1.0, p) == doctest::Approx(1.0 / (2 * pi)).epsilon(1e-12));
  const std::vector<double> origin{0.0, 0.0};
  CHECK_THROWS_AS(levy_density(origin, p), SingularityError);
}

TEST_CASE("Levy density decays exponentially when m > 0") {
  const auto p = ProcessParams::make(1.0, 1.0, 2);
  const double a = levy_density_radial(20.0, p) * std::pow(20.0, 10);
  const double b = levy_density_radial(40.0, p) * std::pow(40.0, 10);
  CHECK(b < a);
  CHECK(levy_density_radial(0.01, p) / stable_levy_density_radial(0.01, p) ==
        doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("stable subordinator density matches the Levy(1/2) law") {
  CHECK(stable_subordinator_density(1.0, 0.5) == doctest::Approx(0.219695).epsilon(1e-6));
  for (double u : {0.01, 0.05, 0.3, 1.0, 4.0, 20.0, 2000.0, 1e5}) {
    CHECK(stable_subordinator_density(u, 0.5) == doctest::Approx(oracle::levy_half(u)).epsilon(1e-9));
  }
  CHECK_THROWS_AS(stable_subordinator_density(-1.0, 0.5), DomainError);
  CHECK_THROWS_AS(stable_subordinator_density(1.0, 1.0), DomainError);
}

TEST_CASE("stable subordinator density has unit mass and the right Laplace transform") {
  for (double beta : {0.3, 0.5, 0.7, 0.9}) {
    // Simpson in s = log u on [-30, 30]; beyond that the mass is negligible
    // except for the u^{-beta} tail, which is added in closed form.
    auto g = [&](double lambda) {
      return oracle::simpson(
          [&](double s) {
            const double u = std::exp(s);
            return std::exp(-lambda * u) * stable_subordinator_density(u, beta) * u;
          },
          -30.0, 30.0, 6000);
    };
    const double tail = std::pow(std::exp(30.0), -beta) / (std::tgamma(1.0 - beta));
    CHECK(g(0.0) + tail == doctest::Approx(1.0).epsilon(2e-6));
    for (double lambda : {0.1, 1.0, 10.0}) {
      CHECK(g(lambda) == doctest::Approx(std::exp(-std::pow(lambda, beta))).epsilon(1e-8));
    }
  }
}

TEST_CASE("large-u series agrees with the angular integral") {
  SubordinatorDensityOptions direct;
  direct.series_from = 1e300;
  for (double beta : {0.3, 0.7}) {
    for (double u : {50.0, 200.0}) {
      CHECK(stable_subordinator_series(u, beta) ==
            doctest::Approx(stable_subordinator_density(u, beta, direct)).epsilon(1e-8));
    }
  }
}

TEST_CASE("time scaling of the subordinator density") {
  CHECK(subordinator_density_at(1.0, 0.7, 0.6) == doctest::Approx(stable_subordinator_density(0.7, 0.6)).epsilon(1e-14));
  CHECK(subordinator_density_at(4.0, 4.0, 0.5) == doctest::Approx(oracle::levy_half(0.25) / 16).epsilon(1e-9));
  for (double t : {0.1, 1.0, 10.0}) {
    const double mass = oracle::simpson(
        [&](double s) { return subordinator_density_at(t, std::exp(s), 0.5) * std::exp(s); },
        -25.0, 40.0, 8000);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("tempered density") {
  const auto p0 = ProcessParams::make(1.0, 0.0, 2);
  CHECK(tempered_density(0.5, 0.3, p0) == doctest::Approx(subordinator_density_at(0.5, 0.3, 0.5)).epsilon(1e-14));
  const auto p1 = ProcessParams::make(1.0, 1.0, 2);
  CHECK(tempered_density(1.0, 1.0, p1) == doctest::Approx(0.219695).epsilon(1e-6));
  for (double alpha : {0.8, 1.0, 1.6}) {
    const auto p = ProcessParams::make(alpha, 0.7, 2);
    const double mass = oracle::simpson(
        [&](double s) { return tempered_density(0.4, std::exp(s), p) * std::exp(s); }, -25.0,
        12.0, 8000);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-7));
  }
}

TEST_CASE("Kanter function") {
  CHECK(kanter_function(pi / 2, 0.5) == doctest::Approx(0.5).epsilon(1e-14));
  const double beta = 0.3, phi = 1.1;
  const double direct = std::pow(std::sin(beta * phi) / std::sin(phi), beta / (1 - beta)) *
                        std::sin((1 - beta) * phi) / std::sin(phi);
  CHECK(kanter_function(phi, beta) == doctest::Approx(direct).epsilon(1e-13));
}

TEST_CASE("process parameters") {
  const auto p = ProcessParams::make(1.5, 2.0, 3);
  CHECK(p.beta == 0.75);
  CHECK(p.p == doctest::Approx(2.25));
  CHECK(p.tilt() == doctest::Approx(std::pow(2.0, 1 / 0.75)));
  CHECK_THROWS_AS(ProcessParams::make(2.0, 0.0, 2), InvalidParameter);
  CHECK_THROWS_AS(ProcessParams::make(1.0, -1.0, 2), InvalidParameter);
  CHECK_THROWS_AS(ProcessParams::make(1.0, 0.0, 1), InvalidParameter);
}
