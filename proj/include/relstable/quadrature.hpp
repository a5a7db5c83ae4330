#pragma once

// Globally adaptive 21-point Gauss-Kronrod quadrature on finite intervals.
// Infinite ranges are handled by the callers through a change of variables.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "relstable/errors.hpp"

namespace relstable::quad {

struct Options {
  double abs_tol = 0.0;
  double rel_tol = 1e-10;
  int max_intervals = 4000;
};

struct Result {
  double value = 0.0;
  double abs_error = 0.0;
  int evaluations = 0;
  bool converged = false;
};

namespace detail {

inline constexpr std::array<double, 11> kNodes = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};

inline constexpr std::array<double, 11> kKronrod = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600885949390, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};

// Gauss weights for the odd-indexed Kronrod nodes.
inline constexpr std::array<double, 5> kGauss = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gk21(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kKronrod[10];
  double gauss = 0.0;
  for (int j = 0; j < 10; ++j) {
    const double dx = half * kNodes[j];
    const double fsum = f(center - dx) + f(center + dx);
    kronrod += kKronrod[j] * fsum;
    if (j % 2 == 1) gauss += kGauss[j / 2] * fsum;
  }
  kronrod *= half;
  gauss *= half;
  double err = std::abs(kronrod - gauss);
  if (!std::isfinite(kronrod)) err = std::numeric_limits<double>::infinity();
  return {a, b, kronrod, err};
}

}  // namespace detail

/// Integrates f over [a, b]; never throws, reports convergence in the result.
template <class F>
Result integrate(F&& f, double a, double b, const Options& opt = {}) {
  Result res;
  if (a == b) {
    res.converged = true;
    return res;
  }
  std::priority_queue<detail::Segment> heap;
  auto first = detail::gk21(f, a, b);
  heap.push(first);
  double total = first.value;
  double error = first.error;
  int intervals = 1;
  res.evaluations = 21;
  while (true) {
    const double tol = std::max(opt.abs_tol, opt.rel_tol * std::abs(total));
    if (error <= tol) {
      res.converged = true;
      break;
    }
    if (intervals >= opt.max_intervals || !std::isfinite(total)) break;
    auto worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    // Interval collapsed to machine resolution.
    if (mid <= worst.a || mid >= worst.b) break;
    heap.pop();
    auto left = detail::gk21(f, worst.a, mid);
    auto right = detail::gk21(f, mid, worst.b);
    res.evaluations += 42;
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++intervals;
  }
  // Re-sum to shed the drift of the running updates.
  double value = 0.0, err = 0.0;
  while (!heap.empty()) {
    value += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  res.value = value;
  res.abs_error = err;
  if (!res.converged) {
    res.converged = err <= std::max(opt.abs_tol, opt.rel_tol * std::abs(value));
  }
  return res;
}

/// Like integrate() but throws QuadratureFailure when the tolerance is missed.
template <class F>
double integrate_or_throw(F&& f, double a, double b, const Options& opt,
                          const std::string& what) {
  auto r = integrate(std::forward<F>(f), a, b, opt);
  if (!r.converged) throw QuadratureFailure(what, r.value, r.abs_error);
  return r.value;
}

/// Sums adaptive integrals over consecutive breakpoints.
template <class F>
Result integrate_pieces(F&& f, const std::vector<double>& breaks,
                        const Options& opt = {}) {
  Result total;
  total.converged = true;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    auto r = integrate(f, breaks[i], breaks[i + 1], opt);
    total.value += r.value;
    total.abs_error += r.abs_error;
    total.evaluations += r.evaluations;
    total.converged = total.converged && r.converged;
  }
  if (!total.converged) {
    total.converged =
        total.abs_error <= std::max(opt.abs_tol, opt.rel_tol * std::abs(total.value));
  }
  return total;
}

}  // namespace relstable::quad
