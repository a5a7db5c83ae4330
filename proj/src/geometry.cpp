#include "relstable/geometry.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>

#include "relstable/errors.hpp"
#include "relstable/specfun.hpp"

namespace relstable {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double distance(std::span<const double> x, const Point& c) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x[i] - c[i];
    s += v * v;
  }
  return std::sqrt(s);
}

Point normalized_center(int d, Point center) {
  if (center.empty()) center.assign(static_cast<std::size_t>(d), 0.0);
  if (center.size() != static_cast<std::size_t>(d)) {
    throw InvalidParameter("center dimension does not match d");
  }
  return center;
}

double shell_volume(int d, double r_lo, double r_hi) {
  if (r_hi <= r_lo) return 0.0;
  return surface_area(d) / d * (std::pow(r_hi, d) - std::pow(r_lo, d));
}

// Uniform point with |x - c| in [r_lo, r_hi): radius by inverse CDF in r^d.
Point sample_shell(int d, const Point& c, double r_lo, double r_hi, RngStream& rng) {
  const double lo = std::pow(r_lo, d);
  const double hi = std::pow(r_hi, d);
  const double r = std::pow(lo + (hi - lo) * rng.uniform(), 1.0 / d);
  Point x(static_cast<std::size_t>(d));
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& v : x) {
      v = rng.normal();
      norm += v * v;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = c[i] + r * x[i] / norm;
  return x;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return out;
}

std::string trim(std::string s) {
  auto issp = [](unsigned char ch) { return std::isspace(ch) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), issp));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), issp).base(), s.end());
  return s;
}

}  // namespace

Domain Domain::ball(int d, double radius, Point center) {
  if (d < 2) throw InvalidParameter("dimension must be >= 2");
  if (!(radius > 0.0)) throw InvalidParameter("ball radius must be positive");
  return Domain(d, Ball{normalized_center(d, std::move(center)), radius});
}

Domain Domain::annulus(int d, double r_in, double r_out, Point center) {
  if (d < 2) throw InvalidParameter("dimension must be >= 2");
  if (!(r_in > 0.0 && r_in < r_out) || !std::isfinite(r_out)) {
    throw InvalidParameter("annulus needs 0 < r_in < r_out < inf");
  }
  return Domain(d, Annulus{normalized_center(d, std::move(center)), r_in, r_out});
}

Domain Domain::halfspace(int d) {
  if (d < 2) throw InvalidParameter("dimension must be >= 2");
  return Domain(d, HalfSpace{});
}

bool Domain::bounded() const {
  return std::visit(overloaded{[](const Ball& b) { return std::isfinite(b.radius); },
                               [](const Annulus&) { return true; },
                               [](const HalfSpace&) { return false; }},
                    shape_);
}

bool Domain::contains(std::span<const double> x) const {
  return std::visit(
      overloaded{[&](const Ball& b) { return distance(x, b.center) < b.radius; },
                 [&](const Annulus& a) {
                   const double r = distance(x, a.center);
                   return r > a.r_in && r < a.r_out;
                 },
                 [&](const HalfSpace&) { return x[0] > 0.0; }},
      shape_);
}

double Domain::delta(std::span<const double> x) const {
  return std::visit(
      overloaded{[&](const Ball& b) { return std::max(0.0, b.radius - distance(x, b.center)); },
                 [&](const Annulus& a) {
                   const double r = distance(x, a.center);
                   return std::max(0.0, std::min(r - a.r_in, a.r_out - r));
                 },
                 [&](const HalfSpace&) { return std::max(0.0, x[0]); }},
      shape_);
}

double Domain::max_delta() const {
  return std::visit(overloaded{[](const Ball& b) { return b.radius; },
                               [](const Annulus& a) { return 0.5 * (a.r_out - a.r_in); },
                               [](const HalfSpace&) {
                                 return std::numeric_limits<double>::infinity();
                               }},
                    shape_);
}

double Domain::volume() const {
  return std::visit(
      overloaded{[&](const Ball& b) { return surface_area(d_) * std::pow(b.radius, d_) / d_; },
                 [&](const Annulus& a) { return shell_volume(d_, a.r_in, a.r_out); },
                 [](const HalfSpace&) -> double {
                   throw DomainError("the half-space has no finite volume");
                 }},
      shape_);
}

double Domain::surface() const {
  return std::visit(
      overloaded{[&](const Ball& b) { return surface_area(d_) * std::pow(b.radius, d_ - 1); },
                 [&](const Annulus& a) {
                   return surface_area(d_) *
                          (std::pow(a.r_out, d_ - 1) + std::pow(a.r_in, d_ - 1));
                 },
                 [](const HalfSpace&) -> double {
                   throw DomainError("the half-space has no finite surface area");
                 }},
      shape_);
}

double Domain::smoothness_radius() const {
  return std::visit(
      overloaded{[](const Ball& b) { return b.radius; },
                 // Both rolling balls of radius R must fit: inside the shell
                 // and inside the hole.
                 [](const Annulus& a) { return std::min(a.r_in, 0.5 * (a.r_out - a.r_in)); },
                 [](const HalfSpace&) { return std::numeric_limits<double>::infinity(); }},
      shape_);
}

double Domain::level_set_area(double q) const {
  if (!bounded()) throw DomainError("layer area needs a bounded domain");
  if (!(q >= 0.0 && q <= max_delta())) {
    throw DomainError("level parameter q outside [0, max delta]: " + std::to_string(q));
  }
  const double w = surface_area(d_);
  const int d = d_;
  return std::visit(
      overloaded{[&](const Ball& b) { return w * std::pow(b.radius - q, d - 1); },
                 [&](const Annulus& a) {
                   return w * (std::pow(a.r_out - q, d - 1) + std::pow(a.r_in + q, d - 1));
                 },
                 [](const HalfSpace&) -> double {
                   throw DomainError("the half-space has no finite layer area");
                 }},
      shape_);
}

double Domain::layer_area(double q) const {
  if (!bounded()) throw DomainError("layer area needs a bounded domain");
  if (!(q >= 0.0 && q <= smoothness_radius())) {
    throw DomainError("layer parameter q outside [0, R]: " + std::to_string(q));
  }
  return level_set_area(q);
}

double Domain::layer_volume(double q_lo, double q_hi) const {
  if (!bounded()) throw DomainError("layer volume needs a bounded domain");
  const double top = max_delta();
  q_lo = std::clamp(q_lo, 0.0, top);
  q_hi = std::clamp(q_hi, 0.0, top);
  if (q_hi <= q_lo) return 0.0;
  return std::visit(
      overloaded{[&](const Ball& b) {
                   return shell_volume(d_, b.radius - q_hi, b.radius - q_lo);
                 },
                 [&](const Annulus& a) {
                   return shell_volume(d_, a.r_in + q_lo, a.r_in + q_hi) +
                          shell_volume(d_, a.r_out - q_hi, a.r_out - q_lo);
                 },
                 [](const HalfSpace&) { return 0.0; }},
      shape_);
}

Point Domain::sample_uniform(RngStream& rng) const {
  if (!bounded()) throw DomainError("uniform sampling needs a bounded domain");
  return std::visit(overloaded{[&](const Ball& b) {
                                 return sample_shell(d_, b.center, 0.0, b.radius, rng);
                               },
                               [&](const Annulus& a) {
                                 return sample_shell(d_, a.center, a.r_in, a.r_out, rng);
                               },
                               [](const HalfSpace&) -> Point { return {}; }},
                    shape_);
}

Point Domain::sample_layer(double q_lo, double q_hi, RngStream& rng) const {
  if (!bounded()) throw DomainError("layer sampling needs a bounded domain");
  if (!(q_lo >= 0.0 && q_hi > q_lo) || layer_volume(q_lo, q_hi) <= 0.0) {
    throw DomainError("empty layer [" + std::to_string(q_lo) + ", " + std::to_string(q_hi) + ")");
  }
  const double top = max_delta();
  const double hi = std::min(q_hi, top);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Point x = std::visit(
        overloaded{[&](const Ball& b) {
                     return sample_shell(d_, b.center, b.radius - hi, b.radius - q_lo, rng);
                   },
                   [&](const Annulus& a) {
                     const double v_in = shell_volume(d_, a.r_in + q_lo, a.r_in + hi);
                     const double v_out = shell_volume(d_, a.r_out - hi, a.r_out - q_lo);
                     if (rng.uniform() * (v_in + v_out) < v_in) {
                       return sample_shell(d_, a.center, a.r_in + q_lo, a.r_in + hi, rng);
                     }
                     return sample_shell(d_, a.center, a.r_out - hi, a.r_out - q_lo, rng);
                   },
                   [](const HalfSpace&) -> Point { return {}; }},
        shape_);
    // Rounding can push a point across a shell edge; redraw those.
    const double dl = delta(x);
    if (contains(x) && dl >= q_lo && (dl < q_hi || (q_hi >= top && dl <= top))) return x;
  }
  throw DomainError("layer sampling failed to land inside the layer");
}

Point Domain::inward_normal(std::span<const double> x) const {
  Point n(static_cast<std::size_t>(d_), 0.0);
  auto radial = [&](const Point& c, double sign) {
    const double r = distance(x, c);
    if (r == 0.0) throw DomainError("inward normal undefined at the center");
    for (std::size_t i = 0; i < n.size(); ++i) n[i] = sign * (x[i] - c[i]) / r;
  };
  std::visit(overloaded{[&](const Ball& b) { radial(b.center, -1.0); },
                        [&](const Annulus& a) {
                          const double r = distance(x, a.center);
                          radial(a.center, (r - a.r_in < a.r_out - r) ? 1.0 : -1.0);
                        },
                        [&](const HalfSpace&) { n[0] = 1.0; }},
             shape_);
  return n;
}

std::string Domain::describe() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(overloaded{[&](const Ball& b) { os << "ball:R0=" << b.radius; },
                        [&](const Annulus& a) { os << "annulus:rin=" << a.r_in << ",rout=" << a.r_out; },
                        [&](const HalfSpace&) { os << "halfspace"; }},
             shape_);
  return os.str();
}

Domain parse_domain(std::string_view spec, int d) {
  const std::string s = trim(lower(spec));
  const auto colon = s.find(':');
  const std::string kind = trim(s.substr(0, colon));
  std::map<std::string, double> kv;
  if (colon != std::string::npos) {
    std::stringstream rest(s.substr(colon + 1));
    std::string item;
    while (std::getline(rest, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw InvalidParameter("malformed domain option: " + item);
      const std::string key = trim(item.substr(0, eq));
      const std::string val = trim(item.substr(eq + 1));
      try {
        std::size_t used = 0;
        kv[key] = std::stod(val, &used);
        if (used != val.size()) throw std::invalid_argument(val);
      } catch (const std::exception&) {
        throw InvalidParameter("domain option " + key + " is not a number: " + val);
      }
    }
  }
  auto take = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw InvalidParameter("domain '" + std::string(spec) + "' is missing " + key);
    const double v = it->second;
    kv.erase(it);
    return v;
  };
  auto finish = [&](Domain dom) {
    if (!kv.empty()) throw InvalidParameter("unknown domain option: " + kv.begin()->first);
    return dom;
  };
  if (kind == "ball") return finish(Domain::ball(d, take("r0")));
  if (kind == "annulus") {
    const double r_in = take("rin");
    const double r_out = take("rout");
    return finish(Domain::annulus(d, r_in, r_out));
  }
  if (kind == "halfspace") return finish(Domain::halfspace(d));
  throw InvalidParameter("unknown domain kind: " + kind);
}

}  // namespace relstable
