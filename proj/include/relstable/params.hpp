#pragma once

#include <string>

namespace relstable {

/// Parameters of the relativistic alpha-stable process X_t = B_{T(t,m)}.
///
/// beta = alpha/2 is the index of the subordinator, p = (d+alpha)/2 enters
/// the Levy density. Construct through make(); the fields are kept public so
/// the struct stays a plain value type.
struct ProcessParams {
  double alpha = 1.0;
  double beta = 0.5;
  double m = 0.0;
  int d = 2;
  double p = 1.5;

  /// Validates 0 < alpha < 2, m >= 0, d >= 2; throws InvalidParameter.
  static ProcessParams make(double alpha, double m, int d);

  ProcessParams with_mass(double mass) const { return make(alpha, mass, d); }

  /// m^{1/beta}: the exponential tilt applied to the subordinator.
  double tilt() const;

  std::string describe() const;

  friend bool operator==(const ProcessParams&, const ProcessParams&) = default;
};

}  // namespace relstable
