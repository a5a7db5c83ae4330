#include "relstable/specfun.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "relstable/errors.hpp"
#include "relstable/quadrature.hpp"

namespace relstable {

namespace {

constexpr double kPi = std::numbers::pi;

void check_beta(double beta) {
  if (!(beta > 0.0 && beta < 1.0)) {
    throw DomainError("subordinator index beta must lie in (0,1), got " +
                      std::to_string(beta));
  }
}

// Gamma(y) for negative non-integer y via the recurrence Gamma(y) = Gamma(y+n)/(y...(y+n-1)).
double gamma_any(double y) {
  if (y > 0.0) return gamma_fn(y);
  if (y == std::floor(y)) {
    throw InvalidParameter("Gamma has a pole at " + std::to_string(y));
  }
  double denom = 1.0;
  while (y <= 0.0) {
    denom *= y;
    y += 1.0;
  }
  return gamma_fn(y) / denom;
}

// log(sin x / x) with full relative accuracy near 0.
double log_sinc(double x) {
  if (std::abs(x) < 0.5) {
    const double x2 = x * x;
    // sin x / x - 1 by its Taylor series; the next term is below 1e-16 relative.
    const double m1 =
        x2 * (-1.0 / 6 + x2 * (1.0 / 120 + x2 * (-1.0 / 5040 + x2 * (1.0 / 362880 +
        x2 * (-1.0 / 39916800 + x2 * (1.0 / 6227020800.0))))));
    return std::log1p(m1);
  }
  return std::log(std::sin(x) / x);
}

// log A(phi) - log A(0+). The powers of phi cancel exactly, so the excess is
// a combination of log sinc terms and stays accurate for tiny phi.
double log_kanter_excess(double phi, double beta) {
  const double b = 1.0 - beta;
  return (beta * log_sinc(beta * phi) + b * log_sinc(b * phi) - log_sinc(phi)) / b;
}

// Finds phi in (0, pi) with value(phi) = target for an increasing value();
// bisection on log(phi) so that targets near phi = 0 resolve.
template <class F>
double invert_increasing(F&& value, double target) {
  double lo = -700.0;
  double hi = std::log(kPi);
  if (value(std::exp(lo)) >= target) return std::exp(lo);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double v = value(std::exp(mid));
    if (v < target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-14) break;
  }
  return std::exp(0.5 * (lo + hi));
}

double log_density_zolotarev(double u, double beta,
                             const SubordinatorDensityOptions& opt) {
  const double c = beta / (1.0 - beta);
  // g(phi) = A(phi) x with x = u^{-beta/(1-beta)}; the integrand is g e^{-g}.
  const double log_x = -c * std::log(u);
  const double log_a0 = c * std::log(beta) + std::log1p(-beta);
  const double l0 = log_a0 + log_x;
  const double g0 = std::exp(l0);

  // log of g e^{-g} at phi minus the shift, written through the excess D so
  // the peak region stays resolved even when g0 is astronomically large.
  double shift_base;  // (l0 - g0) - shift
  double shift;
  if (g0 >= 1.0) {
    shift = l0 - g0;
    shift_base = 0.0;
  } else {
    shift = -1.0;
    shift_base = l0 - g0 + 1.0;
  }
  auto log_h = [&](double excess) {
    return shift_base + excess - g0 * std::expm1(excess);
  };
  auto integrand = [&](double phi) {
    if (phi <= 0.0 || phi >= kPi) return 0.0;
    const double ex = log_kanter_excess(phi, beta);
    if (!std::isfinite(ex)) return 0.0;
    return std::exp(log_h(ex));
  };

  // Breakpoints: the peak (or the e^{-1} point when the peak sits at 0) and
  // the point beyond which the integrand is below e^{-50} of its maximum.
  std::vector<double> breaks{0.0};
  auto drop = [&](double phi) { return -log_h(log_kanter_excess(phi, beta)) + shift_base; };
  if (g0 < 1.0) {
    const double peak = invert_increasing(
        [&](double phi) { return l0 + log_kanter_excess(phi, beta); }, 0.0);
    breaks.push_back(peak);
    const double tail = invert_increasing(
        [&](double phi) { return l0 + log_kanter_excess(phi, beta); }, std::log(60.0));
    if (tail > peak) breaks.push_back(tail);
  } else {
    const double b1 = invert_increasing(drop, 1.0);
    const double b2 = invert_increasing(drop, 50.0);
    breaks.push_back(b1);
    if (b2 > b1) breaks.push_back(b2);
  }
  breaks.push_back(kPi);

  double total = 0.0;
  double error = 0.0;
  bool ok = true;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    quad::Options qo;
    qo.rel_tol = opt.rel_tol;
    qo.abs_tol = opt.rel_tol * total * 1e-2;
    auto r = quad::integrate(integrand, breaks[i], breaks[i + 1], qo);
    total += r.value;
    error += r.abs_error;
    ok = ok && r.converged;
  }
  if (!ok && error > 10.0 * opt.rel_tol * total) {
    throw QuadratureFailure("stable subordinator density at u=" + std::to_string(u),
                            total, error);
  }
  if (total <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(beta / ((1.0 - beta) * kPi * u)) + shift + std::log(total);
}

}  // namespace

double gamma_fn(double x) {
  if (!(x > 0.0 && x < 50.0)) {
    throw InvalidParameter("gamma_fn argument outside (0,50): " + std::to_string(x));
  }
  return std::tgamma(x);
}

double surface_area(int d) {
  if (d < 2) throw InvalidParameter("dimension must be >= 2, got " + std::to_string(d));
  return 2.0 * std::pow(kPi, 0.5 * d) / gamma_fn(0.5 * d);
}

double psi(double theta, double p) {
  if (!(theta >= 0.0)) throw DomainError("psi requires theta >= 0");
  if (!(p > 0.5)) throw InvalidParameter("psi requires p > 1/2");
  const double e = p - 0.5;
  auto f = [&](double v) {
    if (v <= 0.0) return 0.0;
    return std::exp(-v + e * std::log(v) + e * std::log(theta + 0.5 * v));
  };
  quad::Options qo;
  qo.rel_tol = 1e-12;
  double total = 0.0;
  double a = 0.0;
  double b = 1.0;
  // Past the mode of e^{-v} v^{2p-1}, stop once a chunk adds < 1e-16 of the total.
  const double mode = 2.0 * e + theta;
  for (int chunk = 0; chunk < 200; ++chunk) {
    auto r = quad::integrate(f, a, b, qo);
    if (!r.converged && r.abs_error > 1e-10 * std::abs(total + r.value)) {
      throw QuadratureFailure("psi", total + r.value, r.abs_error);
    }
    total += r.value;
    if (a > mode && r.value < 1e-16 * total) return total;
    a = b;
    b = (b < 8.0) ? 2.0 * b : b + 8.0;
  }
  throw QuadratureFailure("psi: truncation point not reached", total, total);
}

double a_const(double v, int d) {
  if (d < 2) throw InvalidParameter("dimension must be >= 2");
  const double num = gamma_any(0.5 * (d - v));
  return num / (std::pow(kPi, 0.5 * d) * std::pow(2.0, v) * std::abs(gamma_any(0.5 * v)));
}

double r_const(const ProcessParams& params) {
  return a_const(-params.alpha, params.d) / psi(0.0, params.p);
}

double stable_levy_density_radial(double r, const ProcessParams& params) {
  if (!(r > 0.0)) throw SingularityError("Levy density is singular at x = 0");
  return a_const(-params.alpha, params.d) / std::pow(r, params.d + params.alpha);
}

double levy_density_radial(double r, const ProcessParams& params) {
  if (!(r > 0.0)) throw SingularityError("Levy density is singular at x = 0");
  if (params.m == 0.0) return stable_levy_density_radial(r, params);
  const double k = std::pow(params.m, 1.0 / params.alpha) * r;
  return r_const(params) / std::pow(r, params.d + params.alpha) * std::exp(-k) *
         psi(k, params.p);
}

namespace {
double norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}
}  // namespace

double levy_density(std::span<const double> x, const ProcessParams& params) {
  return levy_density_radial(norm(x), params);
}

double stable_levy_density(std::span<const double> x, const ProcessParams& params) {
  return stable_levy_density_radial(norm(x), params);
}

double log_kanter_function(double phi, double beta) {
  check_beta(beta);
  const double c = beta / (1.0 - beta);
  if (phi <= 0.0 || phi >= kPi) {
    throw DomainError("Kanter function needs phi in (0, pi)");
  }
  if (phi < 1e-3) return c * std::log(beta) + std::log1p(-beta) + log_kanter_excess(phi, beta);
  return c * std::log(std::sin(beta * phi)) + std::log(std::sin((1.0 - beta) * phi)) -
         (c + 1.0) * std::log(std::sin(phi));
}

double kanter_function(double phi, double beta) {
  return std::exp(log_kanter_function(phi, beta));
}

double stable_subordinator_series(double u, double beta) {
  check_beta(beta);
  if (!(u > 0.0)) throw DomainError("subordinator density needs u > 0");
  const double w = std::pow(u, -beta);
  double sum = 0.0;
  double wk = 1.0;
  for (int k = 1; k <= 400; ++k) {
    wk *= w;
    const double mag = std::exp(std::lgamma(k * beta + 1.0) - std::lgamma(k + 1.0)) * wk;
    const double term = ((k % 2 == 1) ? 1.0 : -1.0) * mag * std::sin(k * kPi * beta);
    sum += term;
    if (k > 2 && mag < 1e-17 * std::abs(sum)) break;
  }
  return sum / (kPi * u);
}

double log_stable_subordinator_density(double u, double beta,
                                       const SubordinatorDensityOptions& opt) {
  check_beta(beta);
  if (!(u > 0.0)) throw DomainError("subordinator density needs u > 0, got " + std::to_string(u));
  if (u >= opt.series_from && std::pow(u, -beta) <= opt.series_threshold) {
    return std::log(stable_subordinator_series(u, beta));
  }
  return log_density_zolotarev(u, beta, opt);
}

double stable_subordinator_density(double u, double beta,
                                   const SubordinatorDensityOptions& opt) {
  return std::exp(log_stable_subordinator_density(u, beta, opt));
}

double subordinator_density_at(double t, double u, double beta) {
  if (!(t > 0.0)) throw DomainError("subordinator density needs t > 0");
  const double scale = std::pow(t, -1.0 / beta);
  return std::exp(std::log(scale) + log_stable_subordinator_density(u * scale, beta));
}

double tempered_density(double t, double u, const ProcessParams& params) {
  if (!(t > 0.0)) throw DomainError("subordinator density needs t > 0");
  if (!(u > 0.0)) throw DomainError("subordinator density needs u > 0");
  const double scale = std::pow(t, -1.0 / params.beta);
  const double log_theta =
      std::log(scale) + log_stable_subordinator_density(u * scale, params.beta);
  return std::exp(-params.tilt() * u + params.m * t + log_theta);
}

ProcessParams ProcessParams::make(double alpha, double m, int d) {
  if (!(alpha > 0.0 && alpha < 2.0)) {
    throw InvalidParameter("alpha must lie in (0,2), got " + std::to_string(alpha));
  }
  if (!(m >= 0.0) || !std::isfinite(m)) {
    throw InvalidParameter("mass m must be >= 0, got " + std::to_string(m));
  }
  if (d < 2) throw InvalidParameter("dimension d must be >= 2, got " + std::to_string(d));
  ProcessParams p;
  p.alpha = alpha;
  p.beta = alpha / 2.0;
  p.m = m;
  p.d = d;
  p.p = (d + alpha) / 2.0;
  return p;
}

double ProcessParams::tilt() const { return m == 0.0 ? 0.0 : std::pow(m, 1.0 / beta); }

std::string ProcessParams::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "alpha=" << alpha << ",m=" << m << ",d=" << d;
  return os.str();
}

}  // namespace relstable
