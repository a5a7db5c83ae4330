#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "relstable/errors.hpp"
#include "relstable/kernels.hpp"
#include "relstable/specfun.hpp"

using namespace relstable;
using std::numbers::pi;

TEST_CASE("free density equals the Cauchy kernel at alpha = 1, m = 0") {
  for (int d : {2, 3}) {
    const auto p = ProcessParams::make(1.0, 0.0, d);
    for (double t : {0.05, 1.0, 3.0}) {
      for (double r : {0.0, 0.2, 1.0, 2.0, 5.0}) {
        CHECK(free_density(t, r, p) == doctest::Approx(oracle::cauchy(t, r, d)).epsilon(1e-8));
      }
    }
  }
  const auto p2 = ProcessParams::make(1.0, 0.0, 2);
  CHECK(free_density(1.0, 0.0, p2) == doctest::Approx(0.159155).epsilon(1e-6));
  CHECK(free_density(1.0, 1.0, p2) == doctest::Approx(0.056270).epsilon(1e-5));
}

TEST_CASE("free density equals the relativistic Cauchy kernel when m > 0") {
  for (int d : {2, 3}) {
    for (double m : {0.5, 2.0}) {
      const auto p = ProcessParams::make(1.0, m, d);
      for (double t : {0.1, 1.0}) {
        for (double r : {0.0, 0.5, 2.0}) {
          CHECK(free_density(t, r, p) ==
                doctest::Approx(oracle::relativistic_cauchy(t, r, d, m)).epsilon(1e-7));
        }
      }
    }
  }
}

TEST_CASE("free density at r = 0 through the subordinator") {
  // p(1, 0) = (4 pi)^{-d/2} int z^{-d/2} theta(z) e^{-m^{1/beta} z + m} dz
  for (double alpha : {0.6, 1.4}) {
    for (double m : {0.0, 1.0}) {
      const auto p = ProcessParams::make(alpha, m, 2);
      const double ref = oracle::simpson(
          [&](double s) {
            const double z = std::exp(s);
            return std::pow(4 * pi * z, -1.0) * tempered_density(1.0, z, p) * z;
          },
          -20.0, 30.0, 10000);
      CHECK(free_density(1.0, 0.0, p) == doctest::Approx(ref).epsilon(1e-6));
    }
  }
}

TEST_CASE("free density is radially decreasing and bounded by its value at 0") {
  const auto p = ProcessParams::make(0.8, 1.0, 3);
  double prev = free_density(0.3, 0.0, p);
  for (double r = 0.05; r < 6.0; r += 0.25) {
    const double v = free_density(0.3, r, p);
    CHECK(v <= prev);
    prev = v;
  }
}

TEST_CASE("C1 closed forms and upper bound") {
  CHECK(c1_const(ProcessParams::make(1.0, 0.0, 2)) == doctest::Approx(1 / (2 * pi)).epsilon(1e-12));
  CHECK(c1_const(ProcessParams::make(1.0, 0.0, 3)) == doctest::Approx(1 / (pi * pi)).epsilon(1e-12));
  const auto p = ProcessParams::make(1.0, 2.0, 2);
  CHECK(density_upper_bound(1.0, p) == doctest::Approx(std::exp(2.0) / (2 * pi)).epsilon(1e-12));
  CHECK(free_density(1.0, 0.0, p) < density_upper_bound(1.0, p));
  const auto p0 = ProcessParams::make(1.3, 0.0, 2);
  for (double t : {0.1, 2.0}) {
    CHECK(free_density(t, 0.0, p0) == doctest::Approx(density_upper_bound(t, p0)).epsilon(1e-8));
  }
}

TEST_CASE("C1(t)") {
  const auto p = ProcessParams::make(1.0, 1.0, 2);
  CHECK(c1_of_t(0.0, p) == doctest::Approx(c1_const(p)).epsilon(1e-12));
  const auto p0 = ProcessParams::make(1.0, 0.0, 2);
  CHECK(c1_of_t(5.0, p0) == doctest::Approx(c1_const(p0)).epsilon(1e-12));
  const double a = c1_of_t(0.01, p), b = c1_of_t(0.1, p), c = c1_of_t(1.0, p);
  CHECK(a > b);
  CHECK(b > c);
  // C1(t) = t^{d/alpha} e^{-mt} p(t, 0).
  CHECK(c * std::exp(1.0) == doctest::Approx(free_density(1.0, 0.0, p)).epsilon(1e-8));
}

TEST_CASE("tabulated kernel") {
  const auto p = ProcessParams::make(1.0, 1.0, 2);
  const double t = 0.4;
  const RadialKernelTable table = build_table(p.m * t, p);
  const double h = std::pow(t, 1.0 / p.alpha);
  SUBCASE("exact at nodes") {
    for (std::size_t i = 0; i < table.radii().size(); i += 37) {
      const double r = table.radii()[i] * h;
      CHECK(table.eval(t, r) == doctest::Approx(free_density(t, r, p)).epsilon(1e-9));
    }
  }
  SUBCASE("accurate between nodes") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> unif(std::log(1e-3), std::log(40.0));
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const double r = std::exp(unif(gen)) * h;
      worst = std::max(worst, std::abs(table.eval(t, r) / free_density(t, r, p) - 1));
    }
    CHECK(worst < 1e-4);
  }
  SUBCASE("nonincreasing along the table") {
    for (std::size_t i = 1; i < table.values().size(); ++i) {
      CHECK(table.values()[i] <= table.values()[i - 1]);
    }
  }
  SUBCASE("wrong time is rejected") { CHECK_THROWS_AS(table.eval(0.8, 0.1), StaleTable); }
  SUBCASE("csv dump") {
    std::ostringstream os;
    table.write_csv(os);
    CHECK(os.str().rfind("scaled_radius,F_value\n", 0) == 0);
  }
}

TEST_CASE("one table serves every t at m = 0") {
  const auto p = ProcessParams::make(1.5, 0.0, 3);
  const RadialKernelTable table = build_table(0.0, p);
  for (double t : {0.01, 0.3, 2.0}) {
    CHECK(table_eval(table, t, 0.1) == doctest::Approx(free_density(t, 0.1, p)).epsilon(1e-5));
  }
}

TEST_CASE("kernel cache") {
  KernelCache cache;
  const auto p = ProcessParams::make(1.0, 1.0, 2);
  auto a = cache.get(0.5, p);
  auto b = cache.get(0.5, p);
  CHECK(a.get() == b.get());
  cache.get(0.25, p);
  CHECK(cache.size() == 2);
  cache.clear();
  CHECK(cache.size() == 0);
}
