#pragma once

// Monte Carlo estimators for the killed-process quantities:
//
//   r_D(t,x,x) = E^x[ p(t - tau_D, X_tau - x); tau_D < t ]
//   Z_D(t)     = C1(t) e^{mt} |D| / t^{d/alpha} - int_D r_D(t,x,x) dx
//   f_H(t,q)   = r_H(t, q e1, q e1),   C2(t) = int_0^inf f_H(t,q) dq
//
// Exits are detected on a grid of step dt and timed at the midpoint
// (k - 1/2) dt of the step that left the domain. Every path is also
// monitored on the grids 2dt and 4dt (subsamples of the same path), and the
// per-path scores are combined by Richardson extrapolation in dt.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "relstable/geometry.hpp"
#include "relstable/kernels.hpp"
#include "relstable/params.hpp"
#include "relstable/rng.hpp"
#include "relstable/sampler.hpp"

namespace relstable {

struct TraceEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t n_samples = 0;
  double dt = 0.0;
  double t = 0.0;
  /// Finest-grid estimate before extrapolation.
  double raw_value = 0.0;
  /// Difference between the extrapolations from (dt, 2dt) and (2dt, 4dt).
  double bias = 0.0;
  std::map<std::string, std::string> meta;

  double lower(double z) const { return value - z * std_error; }
  double upper(double z) const { return value + z * std_error; }
};

/// |a - b| within z joint standard errors.
bool agree(const TraceEstimate& a, const TraceEstimate& b, double z);

/// Execution knobs shared by every estimator. Results depend on the seed and
/// on these settings except `workers`.
struct RunOptions {
  int workers = 1;
  /// Monitoring grids dt, 2dt, ..., 2^{levels-1} dt; 1 disables extrapolation.
  int levels = 3;
  /// Order of the discrete-monitoring bias in dt; <= 0 selects min(1, 1/alpha).
  double richardson_order = 0.0;
  /// Paths per batch; each batch draws from its own substream.
  std::size_t batch_size = 256;
};

struct ExitEvent {
  std::optional<std::size_t> step;
  std::optional<Point> position;
};

/// First grid index k >= 1 with positions[k] outside the domain.
ExitEvent first_exit(const PathGrid& path, const Domain& domain);

/// Number of fine steps used for horizon t: ceil(t/dt) rounded up so every
/// coarse grid divides it.
std::size_t fine_steps(double t, double dt, int levels);

/// p(t - tau, r) at the midpoint exit times of every monitoring level. For
/// m = 0 one table serves all times through the scaling law; otherwise a
/// table is built per exit time.
class KernelBank {
 public:
  KernelBank(double t, std::size_t steps, int levels, const ProcessParams& params);

  double t() const { return t_; }
  std::size_t steps() const { return steps_; }
  int levels() const { return levels_; }
  double dt() const { return t_ / static_cast<double>(steps_); }

  /// p(t - (k - 1/2) 2^level dt, r) for 1 <= k <= steps / 2^level.
  double eval(int level, std::size_t k, double r) const;

 private:
  double t_;
  std::size_t steps_;
  int levels_;
  ProcessParams params_;
  std::vector<std::vector<std::shared_ptr<const RadialKernelTable>>> tables_;
  std::vector<std::vector<double>> times_;
};

TraceEstimate r_estimate(double t, const Point& x, const Domain& domain, std::size_t n_paths,
                         double dt, const RngStream& rng, const ProcessParams& params,
                         const RunOptions& opts = {});

struct HalfspaceProfile {
  double t = 0.0;
  std::vector<double> q_grid;
  std::vector<TraceEstimate> f_values;
};

HalfspaceProfile halfspace_profile(double t, const std::vector<double>& q_grid,
                                   std::size_t n_paths, double dt, const RngStream& rng,
                                   const ProcessParams& params, const RunOptions& opts = {});

/// Nodes for integrating the profile in q: log-spaced from 0.01 t^{1/alpha}
/// to q_max = max(5 t^{1/alpha}, 3), with an extra node at `breakpoint`
/// (ignored when not inside that range; the range is extended to cover it).
std::vector<double> halfspace_q_grid(double t, const ProcessParams& params,
                                     double breakpoint = 0.0, int per_decade = 8);

/// int_0^inf f_H dq from a profile on a halfspace_q_grid: Simpson in log q
/// between nodes, the exact value f_H(t,0) = p(t,0) at q = 0, and a power-law
/// tail fitted on the last decade. Throws TailFailure when the fitted slope
/// is >= -1.
TraceEstimate integrate_profile(const HalfspaceProfile& profile, const ProcessParams& params);

TraceEstimate c2_of_t(double t, std::size_t n_paths, double dt, const RngStream& rng,
                      const ProcessParams& params, const RunOptions& opts = {});

/// C2 at t = 1 with m = 0.
TraceEstimate c4_const(std::size_t n_paths, double dt, const RngStream& rng,
                       const ProcessParams& params, const RunOptions& opts = {});

/// Boundaries in delta of the strata used for spatial integrals.
std::vector<double> trace_strata(double t, const Domain& domain, const ProcessParams& params);

struct SpatialBudget {
  std::size_t n_x = 4096;
  std::size_t n_paths = 1;
  double dt = 0.0;  // <= 0 selects t/256
  /// Points drawn in each stratum at least.
  std::size_t min_per_stratum = 4;
};

/// Z_D(t) with the spatial integral of r_D stratified over boundary layers.
TraceEstimate z_trace(double t, const Domain& domain, const SpatialBudget& budget,
                      const RngStream& rng, const ProcessParams& params,
                      const RunOptions& opts = {});

struct ResidualBudget {
  SpatialBudget spatial;
  std::size_t profile_paths = 20000;
  int profile_per_decade = 8;
};

struct ResidualRow {
  double t = 0.0;
  TraceEstimate z;
  double first_term = 0.0;
  TraceEstimate c2;
  double second_term = 0.0;
  /// C2(t) t^{(d-1)/alpha}: the second-term constant, equal to C4 at m = 0.
  double c2_scaled = 0.0;
  double residual = 0.0;
  double residual_se = 0.0;
  double rho = 0.0;
  double rho_se = 0.0;
};

struct ResidualReport {
  std::vector<ResidualRow> rows;
  double c3 = 0.0;
  /// Least-squares slope of log rho against log t.
  double slope = 0.0;
};

/// Residual of the two-term expansion on each t. The spatial integral is
/// computed against the tangent half-space at the nearest boundary point:
/// each path is monitored for D and for H(x) at once, and the half-space part
/// is added back through the co-area formula and the profile f_H.
ResidualReport residual_scan(const std::vector<double>& t_grid, const Domain& domain,
                             const ResidualBudget& budget, const RngStream& rng,
                             const ProcessParams& params, const RunOptions& opts = {});

struct Lambda1Fit {
  TraceEstimate lambda1;
  std::vector<TraceEstimate> traces;
  /// Spread of the pairwise slopes; a proxy for higher-mode contamination.
  double contamination = 0.0;
  bool contaminated = false;
};

/// Weighted least-squares slope of -log Z_D(t). Throws InsufficientBudget
/// when an estimate of Z is not positive.
Lambda1Fit lambda1_estimate(const Domain& domain, const std::vector<double>& t_grid,
                            const SpatialBudget& budget, const RngStream& rng,
                            const ProcessParams& params, const RunOptions& opts = {});

struct ComparisonRow {
  Point x;
  TraceEstimate r_mass;       // r_D with the given m
  TraceEstimate r_stable;     // r_D with m = 0
  double r_bound = 0.0;       // e^{2mt} r_stable
  double r_excess = 0.0;      // r_mass - r_bound in joint standard errors
  double p_mass = 0.0;        // p(t,0) - r_mass
  double p_bound = 0.0;       // e^{mt}(p~(t,0) - r_stable)
  double p_excess = 0.0;
  bool violated = false;
};

struct ComparisonReport {
  double t = 0.0;
  double z = 3.0;
  std::vector<ComparisonRow> rows;
  bool any_violation() const;
};

ComparisonReport comparison_check(double t, const std::vector<Point>& x_list, const Domain& domain,
                          std::size_t n_paths, double dt, const RngStream& rng,
                          const ProcessParams& params, double z = 3.0,
                          const RunOptions& opts = {});

}  // namespace relstable
