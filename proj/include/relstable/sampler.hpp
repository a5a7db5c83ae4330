#pragma once

// Exact sampling of the stable and tempered subordinators and of increments
// of X_t = B_{T(t,m)}. The Brownian motion here has E e^{i xi.B_t} = e^{-t|xi|^2},
// i.e. variance 2t per coordinate.

#include <span>
#include <vector>

#include "relstable/params.hpp"
#include "relstable/rng.hpp"

namespace relstable {

using Point = std::vector<double>;

inline constexpr double kDefaultAcceptanceFloor = 1e-3;

/// Kanter's representation: T = dt^{1/beta} (A(angle)/w)^{(1-beta)/beta} with
/// angle uniform on (0, pi) and w standard exponential is a draw of T_beta(dt).
double stable_from_uniforms(double dt, double beta, double angle, double w);

double sample_stable_subordinator(double dt, double beta, RngStream& rng);

struct TemperedDraw {
  double value = 0.0;
  long proposals = 0;
};

/// Draw of T_beta(dt, m) by rejection from T_beta(dt): accept u with
/// probability e^{-m^{1/beta} u}. Throws StepTooLarge when the acceptance
/// rate e^{-m dt} is below the floor.
TemperedDraw sample_tempered_subordinator_counted(double dt, const ProcessParams& params,
                                                  RngStream& rng,
                                                  double acceptance_floor = kDefaultAcceptanceFloor);
double sample_tempered_subordinator(double dt, const ProcessParams& params, RngStream& rng,
                                    double acceptance_floor = kDefaultAcceptanceFloor);

/// Centered Gaussian vector with variance 2u per coordinate.
void gaussian_leg(double u, RngStream& rng, std::span<double> out);

Point sample_increment(double dt, const ProcessParams& params, RngStream& rng);

/// Precomputed constants for repeated increments with one (dt, params).
class IncrementSampler {
 public:
  IncrementSampler(double dt, const ProcessParams& params,
                   double acceptance_floor = kDefaultAcceptanceFloor);

  double dt() const { return dt_; }
  const ProcessParams& params() const { return params_; }

  double stable(RngStream& rng) const;
  TemperedDraw tempered(RngStream& rng) const;
  /// Writes one increment of X over dt into out (size d).
  void increment(RngStream& rng, std::span<double> out) const;

 private:
  double dt_;
  ProcessParams params_;
  double scale_;     // dt^{1/beta}
  double exponent_;  // (1-beta)/beta
  double c_;         // beta/(1-beta)
  double tilt_;      // m^{1/beta}
};

/// Positions of X on the grid k dt, k = 0..floor(horizon/dt).
struct PathGrid {
  Point start;
  double dt = 0.0;
  double horizon = 0.0;
  std::vector<Point> positions;
};

PathGrid simulate_path(const Point& start, double horizon, double dt,
                       const ProcessParams& params, RngStream& rng);

}  // namespace relstable
