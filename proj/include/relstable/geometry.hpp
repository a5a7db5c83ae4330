#pragma once

// Domains with R-smooth boundary (ball, annulus) plus the half-space
// H = {x_1 > 0}. All shapes are immutable values.

#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <variant>

#include "relstable/rng.hpp"
#include "relstable/sampler.hpp"

namespace relstable {

struct Ball {
  Point center;
  double radius;
};

struct Annulus {
  Point center;
  double r_in;
  double r_out;
};

struct HalfSpace {};

class Domain {
 public:
  using Shape = std::variant<Ball, Annulus, HalfSpace>;

  /// Ball(center, R0); an infinite radius models the whole space.
  static Domain ball(int d, double radius, Point center = {});
  static Domain whole_space(int d) { return ball(d, std::numeric_limits<double>::infinity()); }
  static Domain annulus(int d, double r_in, double r_out, Point center = {});
  static Domain halfspace(int d);

  int dim() const { return d_; }
  const Shape& shape() const { return shape_; }
  bool bounded() const;

  bool contains(std::span<const double> x) const;
  /// Distance to the boundary for x in D, 0 otherwise.
  double delta(std::span<const double> x) const;
  /// Largest value delta takes on D (R0 for a ball, half the shell width for an annulus).
  double max_delta() const;

  double volume() const;
  double surface() const;
  double smoothness_radius() const;

  /// |dD_q| for D_q = {delta >= q}; defined for 0 <= q <= R.
  double layer_area(double q) const;
  /// Same closed form on the whole range 0 <= q <= max_delta().
  double level_set_area(double q) const;
  /// Volume of {x in D : q_lo <= delta(x) < q_hi}.
  double layer_volume(double q_lo, double q_hi) const;

  Point sample_uniform(RngStream& rng) const;
  /// Uniform on {q_lo <= delta < q_hi}; throws DomainError for an empty layer.
  Point sample_layer(double q_lo, double q_hi, RngStream& rng) const;

  /// Inward unit normal at the boundary point nearest to x (x in D, x not a
  /// center). Defines the tangent half-space H(x) = {y : (y - x*) . n > 0}.
  Point inward_normal(std::span<const double> x) const;

  std::string describe() const;

 private:
  Domain(int d, Shape shape) : d_(d), shape_(std::move(shape)) {}
  int d_;
  Shape shape_;
};

/// Parses "ball:R0=1", "annulus:rin=1,rout=3" or "halfspace" (case-insensitive).
Domain parse_domain(std::string_view spec, int d);

}  // namespace relstable
