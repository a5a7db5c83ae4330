#pragma once

// Special functions and exact densities of the subordinator and Levy measure.

#include <span>

#include "relstable/params.hpp"

namespace relstable {

/// Gamma function on (0, 50); anything else is an InvalidParameter.
double gamma_fn(double x);

/// omega_d = 2 pi^{d/2} / Gamma(d/2), the area of the unit sphere in R^d.
double surface_area(int d);

/// psi(theta) = int_0^inf e^{-v} v^{p-1/2} (theta + v/2)^{p-1/2} dv.
double psi(double theta, double p);

/// A(v, d) = Gamma((d-v)/2) / (pi^{d/2} 2^v |Gamma(v/2)|), v not an even integer.
double a_const(double v, int d);

/// R(alpha, d) = A(-alpha, d) / psi(0).
double r_const(const ProcessParams& params);

/// Levy density of the relativistic process; throws SingularityError at x = 0.
double levy_density(std::span<const double> x, const ProcessParams& params);
double levy_density_radial(double r, const ProcessParams& params);

/// Levy density of the isotropic alpha-stable process, A(-alpha,d)/|x|^{d+alpha}.
double stable_levy_density(std::span<const double> x, const ProcessParams& params);
double stable_levy_density_radial(double r, const ProcessParams& params);

struct SubordinatorDensityOptions {
  /// Relative tolerance of the angular quadrature.
  double rel_tol = 1e-11;
  /// Above this u the convergent large-u series replaces the angular
  /// integral whenever u^{-beta} <= series_threshold.
  double series_from = 1e3;
  double series_threshold = 0.05;
};

/// theta_beta(1, u): density of T_beta(1), whose Laplace transform is
/// exp(-lambda^beta). Throws DomainError for u <= 0 or beta outside (0,1),
/// QuadratureFailure when the angular integral does not converge.
double stable_subordinator_density(double u, double beta,
                                   const SubordinatorDensityOptions& opt = {});

/// log theta_beta(1, u); finite even where the density underflows.
double log_stable_subordinator_density(double u, double beta,
                                       const SubordinatorDensityOptions& opt = {});

/// Large-u series (1/pi) sum_k (-1)^{k+1} Gamma(k beta + 1)/k! sin(k pi beta) u^{-k beta - 1}.
/// Converges for every u > 0; numerically useful once u^{-beta} is small.
double stable_subordinator_series(double u, double beta);

/// theta_beta(t, u) = t^{-1/beta} theta_beta(1, u t^{-1/beta}).
double subordinator_density_at(double t, double u, double beta);

/// theta_beta(t, u, m) = exp(-m^{1/beta} u + m t) theta_beta(t, u).
double tempered_density(double t, double u, const ProcessParams& params);

/// Kanter's function A(phi) = [sin(beta phi)/sin phi]^{beta/(1-beta)} sin((1-beta)phi)/sin phi
/// on (0, pi); shared by the density integral and the exact sampler.
double kanter_function(double phi, double beta);
double log_kanter_function(double phi, double beta);

}  // namespace relstable
