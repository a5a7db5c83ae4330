#include "relstable/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "relstable/errors.hpp"
#include "relstable/specfun.hpp"

namespace relstable {

namespace {

constexpr double kPi = std::numbers::pi;
// Lowest s kept: theta_beta(1, e^s) < e^{-1000} below it.
constexpr double kLowerExponent = 1000.0;
// Integrand peak must sit this far inside the grid for the quadrature to be trusted.
constexpr double kPeakMargin = 12.0;

struct GaussianMatrix {
  std::vector<double> g;  // row-major [node][j]
  std::size_t cols = 0;
};

std::vector<double> table_radii() {
  std::vector<double> r(RadialKernelTable::kNodes);
  const double lo = std::log(RadialKernelTable::kMinRadius);
  const double hi = std::log(RadialKernelTable::kMaxRadius);
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i] = std::exp(lo + (hi - lo) * static_cast<double>(i) /
                             static_cast<double>(r.size() - 1));
  }
  r.back() = RadialKernelTable::kMaxRadius;
  return r;
}

// exp(-rho_i^2 e^{-s_j} / 4) for the fixed table radii, shared across every
// table built on the same subordinator grid.
std::shared_ptr<const GaussianMatrix> gaussian_matrix(const SubordinatorGrid& grid) {
  static std::mutex mutex;
  static std::map<double, std::shared_ptr<const GaussianMatrix>> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(grid.beta());
  if (it != cache.end()) return it->second;
  auto gm = std::make_shared<GaussianMatrix>();
  const auto radii = table_radii();
  gm->cols = grid.size();
  gm->g.resize(radii.size() * gm->cols);
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double q = 0.25 * radii[i] * radii[i];
    for (std::size_t j = 0; j < gm->cols; ++j) {
      gm->g[i * gm->cols + j] = std::exp(-q * std::exp(-grid.s(j)));
    }
  }
  cache.emplace(grid.beta(), gm);
  return gm;
}

double log_prefactor(int d) { return -0.5 * d * std::log(4.0 * kPi); }

}  // namespace

SubordinatorGrid::SubordinatorGrid(double beta) : beta_(beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw DomainError("grid needs beta in (0,1)");
  const double c = beta / (1.0 - beta);
  const double log_a0 = c * std::log(beta) + std::log1p(-beta);
  // A(0) x(z) = kLowerExponent with x = z^{-c}.
  const double s_lo = -(std::log(kLowerExponent) - log_a0) / c;
  const auto n = static_cast<std::size_t>(std::ceil((kUpper - s_lo) / kStep));
  s_.resize(n + 1);
  log_theta_.resize(n + 1);
  for (std::size_t j = 0; j <= n; ++j) {
    s_[j] = kUpper - kStep * static_cast<double>(n - j);
    log_theta_[j] = log_stable_subordinator_density(std::exp(s_[j]), beta);
  }
}

std::shared_ptr<const SubordinatorGrid> SubordinatorGrid::get(double beta) {
  static std::mutex mutex;
  static std::map<double, std::shared_ptr<const SubordinatorGrid>> cache;
  {
    std::lock_guard lock(mutex);
    auto it = cache.find(beta);
    if (it != cache.end()) return it->second;
  }
  auto grid = std::make_shared<const SubordinatorGrid>(beta);
  std::lock_guard lock(mutex);
  return cache.emplace(beta, grid).first->second;
}

double c1_const(const ProcessParams& params) {
  const int d = params.d;
  return surface_area(d) * gamma_fn(d / params.alpha) /
         (std::pow(2.0 * kPi, d) * params.alpha);
}

ProfileValue scaled_profile(double rho, double kappa, const ProcessParams& params) {
  if (!(rho >= 0.0)) throw DomainError("scaled radius must be >= 0");
  if (!(kappa >= 0.0)) throw DomainError("m t must be >= 0");
  if (rho == 0.0 && kappa == 0.0) return {c1_const(params), 0.0, false};

  const int d = params.d;
  const double beta = params.beta;
  const double damp = kappa == 0.0 ? 0.0 : std::pow(kappa, 1.0 / beta);
  // Peak of z^{-d/2-beta} e^{-rho^2/4z} in s = log z.
  if (rho > 0.0) {
    const double s_peak = std::log(rho * rho / (4.0 * (0.5 * d + beta)));
    if (s_peak > SubordinatorGrid::kUpper - kPeakMargin) {
      // p(t,x) ~ t nu(x) in scaled variables.
      const double alpha = params.alpha;
      const double k = std::pow(kappa, 1.0 / alpha) * rho;
      double v;
      if (kappa == 0.0) {
        v = a_const(-alpha, d) * std::pow(rho, -d - alpha);
      } else {
        v = std::exp(-kappa - k) * r_const(params) * psi(k, params.p) *
            std::pow(rho, -d - alpha);
      }
      return {v, v, true};
    }
  }

  auto grid = SubordinatorGrid::get(beta);
  const double q = 0.25 * rho * rho;
  const double lead = 1.0 - 0.5 * d;
  double fine = 0.0;
  double coarse = 0.0;
  for (std::size_t j = 0; j < grid->size(); ++j) {
    const double s = grid->s(j);
    const double ez = std::exp(s);
    const double e = grid->log_theta(j) + lead * s - q / ez - damp * ez;
    if (e < -745.0) continue;
    const double term = std::exp(e);
    fine += term;
    if ((grid->size() - 1 - j) % 2 == 0) coarse += term;
  }
  const double h = SubordinatorGrid::kStep;
  const double pref = std::exp(log_prefactor(d));
  fine *= h * pref;
  coarse *= 2.0 * h * pref;
  return {fine, std::abs(fine - coarse), false};
}

DensityValue evaluate_free_density(double t, double r, const ProcessParams& params) {
  if (!(t > 0.0)) throw DomainError("free density needs t > 0");
  if (!(r >= 0.0)) throw DomainError("free density needs r >= 0");
  const double rho = r * std::pow(t, -1.0 / params.alpha);
  const auto f = scaled_profile(rho, params.m * t, params);
  const double scale = std::exp(params.m * t - params.d / params.alpha * std::log(t));
  DensityValue out;
  out.value = scale * f.value;
  out.abs_error = scale * f.abs_error;
  out.accurate = !f.asymptotic && rho <= RadialKernelTable::kMaxRadius &&
                 f.abs_error <= 1e-6 * f.value;
  return out;
}

double free_density(double t, double r, const ProcessParams& params) {
  return evaluate_free_density(t, r, params).value;
}

double density_upper_bound(double t, const ProcessParams& params) {
  if (!(t > 0.0)) throw DomainError("density bound needs t > 0");
  return std::exp(params.m * t - params.d / params.alpha * std::log(t)) * c1_const(params);
}

double c1_of_t(double t, const ProcessParams& params) {
  if (!(t >= 0.0)) throw DomainError("C1(t) needs t >= 0");
  return scaled_profile(0.0, params.m * t, params).value;
}

RadialKernelTable::RadialKernelTable(double mt, const ProcessParams& params)
    : mt_(mt), params_(params), radii_(table_radii()) {
  if (!(mt >= 0.0)) throw DomainError("table needs m t >= 0");
  const auto grid = SubordinatorGrid::get(params.beta);
  const auto gm = gaussian_matrix(*grid);
  const int d = params.d;
  const double damp = mt == 0.0 ? 0.0 : std::pow(mt, 1.0 / params.beta);
  const double lead = 1.0 - 0.5 * d;
  const double pref = std::exp(log_prefactor(d)) * SubordinatorGrid::kStep;

  // Column weights e^{log theta_j + (1-d/2) s_j - damp e^{s_j}}; the table
  // values are then one matrix-vector product each for F and rho F'.
  std::vector<double> w(grid->size(), 0.0);
  std::vector<double> w_inv(grid->size(), 0.0);
  for (std::size_t j = 0; j < grid->size(); ++j) {
    const double s = grid->s(j);
    const double e = grid->log_theta(j) + lead * s - damp * std::exp(s);
    w[j] = e < -745.0 ? 0.0 : std::exp(e);
    w_inv[j] = w[j] * std::exp(-s);
  }
  std::size_t j_lo = 0, j_hi = w.size();
  while (j_lo < j_hi && w[j_lo] == 0.0) ++j_lo;
  while (j_hi > j_lo && w[j_hi - 1] == 0.0) --j_hi;

  const std::size_t n = radii_.size();
  values_.resize(n);
  log_values_.resize(n);
  slopes_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* g = gm->g.data() + i * gm->cols;
    double f = 0.0, df = 0.0;
    for (std::size_t j = j_lo; j < j_hi; ++j) {
      f += g[j] * w[j];
      df += g[j] * w_inv[j];
    }
    f *= pref;
    // rho dF/drho = -(rho^2/2) int z^{-1} (...) dz
    df *= -0.5 * radii_[i] * radii_[i] * pref;
    values_[i] = f;
    log_values_[i] = f > 0.0 ? std::log(f) : -std::numeric_limits<double>::infinity();
    slopes_[i] = f > 0.0 ? df / f : 0.0;
  }
  valid_ = 0;
  while (valid_ < n && values_[valid_] > 0.0) ++valid_;
  f0_ = scaled_profile(0.0, mt, params).value;
  log_step_ = std::log(radii_[1]) - std::log(radii_[0]);
}

double RadialKernelTable::profile(double rho) const {
  if (!(rho >= 0.0)) throw DomainError("scaled radius must be >= 0");
  if (rho <= radii_[0]) {
    // F is even and smooth in rho: quadratic between 0 and the first node.
    const double x = rho / radii_[0];
    return f0_ - (f0_ - values_[0]) * x * x;
  }
  if (valid_ >= 2 && rho < radii_[valid_ - 1]) {
    const double x = (std::log(rho) - std::log(radii_[0])) / log_step_;
    auto i = static_cast<std::size_t>(x);
    if (i >= valid_ - 1) i = valid_ - 2;
    const double u = x - static_cast<double>(i);
    const double y0 = log_values_[i], y1 = log_values_[i + 1];
    const double m0 = slopes_[i] * log_step_, m1 = slopes_[i + 1] * log_step_;
    const double u2 = u * u, u3 = u2 * u;
    const double y = (2 * u3 - 3 * u2 + 1) * y0 + (u3 - 2 * u2 + u) * m0 +
                     (-2 * u3 + 3 * u2) * y1 + (u3 - u2) * m1;
    return std::exp(y);
  }
  if (valid_ >= 1 && rho == radii_[valid_ - 1]) return values_[valid_ - 1];
  return scaled_profile(rho, mt_, params_).value;
}

double RadialKernelTable::eval(double t, double r) const {
  const double mt = params_.m * t;
  if (std::abs(mt - mt_) > 1e-9 * std::max(1.0, mt_)) {
    throw StaleTable("table built for mt=" + std::to_string(mt_) +
                     " evaluated at mt=" + std::to_string(mt));
  }
  const double a = params_.alpha;
  const double rho = r * std::pow(t, -1.0 / a);
  return std::exp(params_.m * t - params_.d / a * std::log(t)) * profile(rho);
}

void RadialKernelTable::write_csv(std::ostream& os) const {
  const auto old = os.precision(17);
  os << "scaled_radius,F_value\n";
  os << 0.0 << ',' << f0_ << '\n';
  for (std::size_t i = 0; i < radii_.size(); ++i) {
    os << radii_[i] << ',' << values_[i] << '\n';
  }
  os.precision(old);
}

RadialKernelTable build_table(double mt, const ProcessParams& params) {
  return RadialKernelTable(mt, params);
}

double table_eval(const RadialKernelTable& table, double t, double r) {
  return table.eval(t, r);
}

std::shared_ptr<const RadialKernelTable> KernelCache::get(double mt,
                                                          const ProcessParams& params) {
  const Key key{params.alpha, params.m, params.d, std::llround(mt * 1e12)};
  {
    std::lock_guard lock(mutex_);
    auto it = tables_.find(key);
    if (it != tables_.end()) return it->second;
  }
  auto table = std::make_shared<const RadialKernelTable>(mt, params);
  std::lock_guard lock(mutex_);
  return tables_.emplace(key, table).first->second;
}

std::size_t KernelCache::size() const {
  std::lock_guard lock(mutex_);
  return tables_.size();
}

void KernelCache::clear() {
  std::lock_guard lock(mutex_);
  tables_.clear();
}

KernelCache& KernelCache::global() {
  static KernelCache cache;
  return cache;
}

}  // namespace relstable
