#pragma once

// Free transition density p(t, x) of the relativistic process, computed from
// the subordination formula in the scaled variable z = u t^{-1/beta}:
//
//   p(t, x) = e^{mt} t^{-d/alpha} F(|x| t^{-1/alpha}, m t)
//   F(rho, kappa) = (4 pi)^{-d/2} int_0^inf z^{-d/2} e^{-rho^2/(4z)}
//                   e^{-kappa^{1/beta} z} theta_beta(1, z) dz.

#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

#include "relstable/params.hpp"

namespace relstable {

/// log theta_beta(1, e^s) sampled on a uniform grid in s, shared by every
/// profile evaluation with the same beta. The integrand of F is analytic in a
/// strip around the real s-axis, so the trapezoid rule on this grid converges
/// geometrically; halving the grid gives the error estimate.
class SubordinatorGrid {
 public:
  static constexpr double kStep = 1.0 / 16.0;
  static constexpr double kUpper = 60.0;

  explicit SubordinatorGrid(double beta);

  /// Process-wide cached instance for this beta.
  static std::shared_ptr<const SubordinatorGrid> get(double beta);

  double beta() const { return beta_; }
  std::size_t size() const { return s_.size(); }
  double s(std::size_t j) const { return s_[j]; }
  double log_theta(std::size_t j) const { return log_theta_[j]; }

 private:
  double beta_;
  std::vector<double> s_;
  std::vector<double> log_theta_;
};

struct ProfileValue {
  double value = 0.0;
  double abs_error = 0.0;
  /// The integrand mass lies past the grid; value is the far-field (Levy
  /// density) asymptote p ~ t nu(x).
  bool asymptotic = false;
};

/// Scaled profile F(rho, kappa) by trapezoid quadrature on the cached grid.
ProfileValue scaled_profile(double rho, double kappa, const ProcessParams& params);

struct DensityValue {
  double value = 0.0;
  double abs_error = 0.0;
  /// True when the scaled radius is <= 50 and the quadrature met 1e-6 relative.
  bool accurate = true;
};

DensityValue evaluate_free_density(double t, double r, const ProcessParams& params);

/// p(t, x) at |x| = r.
double free_density(double t, double r, const ProcessParams& params);

/// e^{mt} t^{-d/alpha} C1: dominates p(t, x) for every x.
double density_upper_bound(double t, const ProcessParams& params);

/// C1 = omega_d Gamma(d/alpha) / ((2 pi)^d alpha).
double c1_const(const ProcessParams& params);

/// C1(t) = F(0, m t); equals C1 at t = 0 or m = 0 and decreases in t.
double c1_of_t(double t, const ProcessParams& params);

/// Tabulated F(., mt) on 512 log-spaced scaled radii in [1e-3, 50]. Between
/// nodes log F is interpolated by cubic Hermite in log rho with exact slopes;
/// past the last node the profile is evaluated directly.
class RadialKernelTable {
 public:
  static constexpr std::size_t kNodes = 512;
  static constexpr double kMinRadius = 1e-3;
  static constexpr double kMaxRadius = 50.0;

  RadialKernelTable(double mt, const ProcessParams& params);

  double mt() const { return mt_; }
  const ProcessParams& params() const { return params_; }
  const std::vector<double>& radii() const { return radii_; }
  const std::vector<double>& values() const { return values_; }
  double value_at_zero() const { return f0_; }

  /// F(rho, mt).
  double profile(double rho) const;

  /// p(t, r); throws StaleTable unless m t matches the table's mt.
  double eval(double t, double r) const;

  /// CSV dump, header "scaled_radius,F_value", first row at radius 0.
  void write_csv(std::ostream& os) const;

 private:
  double mt_;
  ProcessParams params_;
  std::vector<double> radii_;
  std::vector<double> values_;
  std::vector<double> log_values_;
  std::vector<double> slopes_;  // d log F / d log rho
  double f0_ = 0.0;
  double log_step_ = 0.0;
  std::size_t valid_ = 0;  // nodes with F > 0
};

RadialKernelTable build_table(double mt, const ProcessParams& params);
double table_eval(const RadialKernelTable& table, double t, double r);

/// Thread-safe cache of tables keyed by (params, mt rounded to 1e-12).
class KernelCache {
 public:
  std::shared_ptr<const RadialKernelTable> get(double mt, const ProcessParams& params);
  std::size_t size() const;
  void clear();

  static KernelCache& global();

 private:
  using Key = std::tuple<double, double, int, long long>;
  mutable std::mutex mutex_;
  std::map<Key, std::shared_ptr<const RadialKernelTable>> tables_;
};

}  // namespace relstable
