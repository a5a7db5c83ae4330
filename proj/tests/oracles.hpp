#pragma once

// Small reference routines used as independent checks. They do not share
// code with the library.

#include <cmath>
#include <functional>
#include <numbers>

namespace oracle {

/// Composite Simpson on [a, b] with n (even) intervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

/// Levy(1/2) density: theta_{1/2}(1,u).
inline double levy_half(double u) {
  return std::pow(u, -1.5) * std::exp(-0.25 / u) / (2.0 * std::sqrt(std::numbers::pi));
}

/// Isotropic Cauchy kernel at time t in R^d.
inline double cauchy(double t, double r, int d) {
  const double a = 0.5 * (d + 1);
  return std::tgamma(a) * t / (std::pow(std::numbers::pi, a) * std::pow(t * t + r * r, a));
}

/// Relativistic Cauchy kernel (alpha = 1, mass m > 0) through Bessel K.
inline double relativistic_cauchy(double t, double r, int d, double m) {
  const double nu = 0.5 * (d + 1);
  const double s = std::sqrt(r * r + t * t);
  return 2.0 * std::pow(m / (2.0 * std::numbers::pi), nu) * t * std::exp(m * t) *
         std::cyl_bessel_k(nu, m * s) / std::pow(s, nu);
}

}  // namespace oracle
