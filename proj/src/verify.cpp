#include "relstable/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

#include "relstable/errors.hpp"
#include "relstable/kernels.hpp"
#include "relstable/parallel.hpp"
#include "relstable/quadrature.hpp"
#include "relstable/specfun.hpp"
#include "relstable/stats.hpp"

namespace relstable {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kDrawBatch = 8192;

std::string num(double v, int digits = 6) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

template <class Fn>
std::vector<std::invoke_result_t<Fn, std::size_t, RngStream&>> batched(
    std::size_t n, const RngStream& rng, int workers, Fn&& fn) {
  using R = std::invoke_result_t<Fn, std::size_t, RngStream&>;
  const std::size_t n_batches = (n + kDrawBatch - 1) / kDrawBatch;
  std::vector<R> out(n_batches);
  parallel_for(n_batches, workers, [&](std::size_t b) {
    RngStream stream = rng.substream(b);
    const std::size_t count = std::min(kDrawBatch, n - b * kDrawBatch);
    out[b] = fn(count, stream);
  });
  return out;
}

double cauchy_kernel(double r, int d) {
  const double a = 0.5 * (d + 1);
  return std::tgamma(a) / (std::pow(std::numbers::pi, a) * std::pow(1.0 + r * r, a));
}

// Weighted least-squares slope of log y on log x with weights (y/se)^2.
std::pair<double, double> loglog_slope(const std::vector<double>& x,
                                       const std::vector<TraceEstimate>& y) {
  double sw = 0, swx = 0, swy = 0;
  std::vector<double> lx, ly, w;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(y[i].value > 0.0)) continue;
    const double rel = std::max(y[i].std_error / y[i].value, 1e-12);
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i].value));
    w.push_back(1.0 / (rel * rel));
  }
  if (lx.size() < 2) throw InsufficientBudget("fewer than two positive values for a slope fit");
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sw += w[i];
    swx += w[i] * lx[i];
    swy += w[i] * ly[i];
  }
  const double mx = swx / sw;
  const double my = swy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += w[i] * (lx[i] - mx) * (lx[i] - mx);
    sxy += w[i] * (lx[i] - mx) * (ly[i] - my);
  }
  return {sxy / sxx, std::sqrt(1.0 / sxx)};
}

struct Suite {
  const ExperimentConfig& cfg;
  std::string dir;
  Format format;
  Metadata meta;
  std::ostream* log;
  double z;
  RunOptions run;

  // Results shared between criteria.
  std::vector<TraceEstimate> traces;  // Z estimates with their first terms in meta
  std::vector<ComparisonReport> comparisons;
  std::optional<ResidualReport> residual;
  std::optional<TraceEstimate> c4;
  ProcessParams residual_params;

  void write(const Table& t) const {
    write_table_file((fs::path(dir) / (t.name + extension(format))).string(), t, format, meta);
  }
  std::size_t scaled(double base, std::size_t floor) const {
    return std::max<std::size_t>(floor,
                                 static_cast<std::size_t>(std::llround(base * cfg.budget_scale)));
  }
  RngStream stream(int id) const { return RngStream(cfg.seed, static_cast<std::uint64_t>(id)); }
  void note(const std::string& s) const {
    if (log) *log << s << std::endl;
  }
};

CriterionResult subordinator_oracle(Suite& s) {
  CriterionResult r{1, "subordinator_density_oracle", true, ""};
  SubordinatorDensityOptions opt;
  opt.rel_tol = s.cfg.subordinator_rel_tol;
  Table t("c01_subordinator_density", {"u", "theta", "closed_form", "rel_error"});
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double u = 0.01 * std::pow(2000.0, i / 99.0);
    const double exact =
        std::pow(u, -1.5) * std::exp(-0.25 / u) / (2.0 * std::sqrt(std::numbers::pi));
    const double v = stable_subordinator_density(u, 0.5, opt);
    const double rel = std::abs(v / exact - 1.0);
    worst = std::max(worst, rel);
    t.add({u, v, exact, rel});
  }
  s.write(t);
  r.passed = worst <= 1e-7;
  r.detail = "max relative error " + num(worst, 3) + " (limit 1e-7)";
  return r;
}

CriterionResult laplace_identity(Suite& s) {
  CriterionResult r{2, "laplace_identity", true, ""};
  SubordinatorDensityOptions opt;
  opt.rel_tol = s.cfg.subordinator_rel_tol;
  Table t("c02_laplace_identity", {"beta", "lambda", "quadrature", "target", "abs_error"});
  double worst = 0.0;
  for (double beta : {0.3, 0.5, 0.7, 0.9}) {
    for (double lambda : {0.1, 1.0, 10.0}) {
      const double v = subordinator_laplace_quadrature(beta, lambda, opt);
      const double target = std::exp(-std::pow(lambda, beta));
      const double err = std::abs(v - target);
      worst = std::max(worst, err);
      t.add({beta, lambda, v, target, err});
    }
  }
  s.write(t);
  r.passed = worst <= 1e-6;
  r.detail = "max absolute error " + num(worst, 3) + " (limit 1e-6)";
  return r;
}

CriterionResult free_density_oracle(Suite& s) {
  CriterionResult r{3, "free_density_oracle", true, ""};
  Table t("c03_free_density", {"d", "r", "density", "cauchy", "rel_error"});
  double worst = 0.0;
  for (int d : {2, 3}) {
    const auto params = ProcessParams::make(1.0, 0.0, d);
    for (double rad : {0.0, 0.5, 1.0, 2.0, 5.0}) {
      const double v = free_density(1.0, rad, params);
      const double exact = cauchy_kernel(rad, d);
      const double rel = std::abs(v / exact - 1.0);
      worst = std::max(worst, rel);
      t.add({static_cast<std::int64_t>(d), rad, v, exact, rel});
    }
  }
  s.write(t);
  r.passed = worst <= 1e-6;
  r.detail = "max relative error " + num(worst, 3) + " (limit 1e-6)";
  return r;
}

CriterionResult sampler_law(Suite& s) {
  CriterionResult r{4, "sampler_law", true, ""};
  const double dt = 0.1;
  const std::size_t n = s.scaled(1e6, 10000);
  Table cf("c04_characteristic_function",
           {"alpha", "m", "xi", "target", "re", "re_se", "im", "im_se", "pass"});
  Table acc("c04_acceptance_rate", {"alpha", "m", "dt", "draws", "proposals", "rate", "rate_se",
                                    "target", "mean", "mean_se", "mean_target", "pass"});
  int failures = 0;
  int id = 0;
  for (auto [alpha, m] : {std::pair{1.0, 0.0}, std::pair{1.0, 1.0}, std::pair{0.5, 1.0}}) {
    const auto params = ProcessParams::make(alpha, m, 2);
    const RngStream base = s.stream(4).substream(static_cast<std::uint64_t>(id++));
    for (const auto& row : charfn_test(params, dt, {0.5, 1.0, 2.0}, n, base.substream(0),
                                       s.run.workers, 4.0)) {
      cf.add({alpha, m, row.xi, row.target, row.re, row.re_se, row.im, row.im_se, row.pass});
      failures += row.pass ? 0 : 1;
    }
    const AcceptanceRow a =
        acceptance_test(params, dt, n, base.substream(1), s.run.workers, 4.0);
    acc.add({alpha, m, dt, a.draws, a.proposals, a.rate, a.rate_se, a.target, a.mean, a.mean_se,
             a.mean_target, a.pass});
    failures += a.pass ? 0 : 1;
  }
  s.write(cf);
  s.write(acc);
  r.passed = failures == 0;
  r.detail = std::to_string(failures) + " of 12 statistical checks outside 4 s.e. (" +
             std::to_string(n) + " draws each)";
  return r;
}

CriterionResult small_time_limit(Suite& s) {
  CriterionResult r{5, "small_time_limit", true, ""};
  const auto params = ProcessParams::make(1.0, 1.0, 2);
  const Domain ball = Domain::ball(2, 1.0);
  const double t = 0.02;
  SpatialBudget budget;
  budget.n_x = s.scaled(1e5, 2000);
  budget.n_paths = 1;
  budget.dt = t / 256.0;
  const TraceEstimate z = z_trace(t, ball, budget, s.stream(5), params, s.run);
  s.traces.push_back(z);
  const double scale = std::pow(t, params.d / params.alpha) * std::exp(-params.m * t);
  const double norm = scale * z.value;
  const double se = scale * z.std_error;
  const double target = c1_const(params) * ball.volume();
  const double tol = std::max(s.z * se, 0.05 * target);
  Table tab("c05_small_time_limit", {"t", "z_trace", "std_error", "normalized", "normalized_se",
                                      "target", "tolerance", "raw_normalized", "bias", "paths"});
  tab.add({t, z.value, z.std_error, norm, se, target, tol, scale * z.raw_value, scale * z.bias,
           static_cast<std::int64_t>(z.n_samples)});
  s.write(tab);
  r.passed = std::abs(norm - target) <= tol;
  r.detail = "t^{d/alpha} e^{-mt} Z = " + num(norm) + " +- " + num(se, 3) + ", target " +
             num(target) + ", tolerance " + num(tol, 3);
  return r;
}

CriterionResult stable_comparison(Suite& s) {
  CriterionResult r{6, "stable_comparison", true, ""};
  const auto params = ProcessParams::make(1.0, 1.0, 2);
  const Domain ball = Domain::ball(2, 1.0);
  const std::vector<Point> xs{{0.0, 0.0}, {0.25, 0.0}, {0.0, -0.5}, {-0.6, 0.3}, {0.5, 0.55}};
  const std::size_t n = s.scaled(2e4, 200);
  Table tab("c06_stable_comparison", {"t", "x1", "x2", "r_mass", "r_mass_se", "r_stable", "r_stable_se",
                           "r_bound", "r_excess_se", "p_mass", "p_bound", "p_excess_se",
                           "violated"});
  int violations = 0;
  int id = 0;
  for (double t : {0.05, 0.1}) {
    ComparisonReport rep = comparison_check(t, xs, ball, n, t / 256.0,
                                    s.stream(6).substream(static_cast<std::uint64_t>(id++)),
                                    params, s.z, s.run);
    for (const auto& row : rep.rows) {
      tab.add({t, row.x[0], row.x[1], row.r_mass.value, row.r_mass.std_error, row.r_stable.value,
               row.r_stable.std_error, row.r_bound, row.r_excess, row.p_mass, row.p_bound,
               row.p_excess, row.violated});
      violations += row.violated ? 1 : 0;
    }
    s.comparisons.push_back(std::move(rep));
  }
  s.write(tab);
  r.passed = violations == 0;
  r.detail = std::to_string(violations) + " violations beyond " + num(s.z) +
             " joint s.e. at 10 (t, x) pairs, " + std::to_string(n) + " paths each";
  return r;
}

CriterionResult halfspace_scaling(Suite& s) {
  CriterionResult r{7, "halfspace_scaling", true, ""};
  const auto params = ProcessParams::make(1.0, 0.0, 2);
  const std::size_t n = s.scaled(4e4, 200);
  const std::vector<double> us{0.5, 1.0, 2.0};
  const std::vector<double> tail_q{2.0, 2.0 * std::sqrt(2.0), 4.0, 4.0 * std::sqrt(2.0), 8.0};
  std::vector<double> ref_q = us;
  ref_q.insert(ref_q.end(), tail_q.begin() + 1, tail_q.end());
  const RngStream base = s.stream(7);
  const HalfspaceProfile ref =
      halfspace_profile(1.0, ref_q, n, 1.0 / 256.0, base.substream(0), params, s.run);

  Table sc("c07_halfspace_scaling", {"t", "q", "f_t", "f_t_se", "rescaled_f_1", "rescaled_se",
                                     "difference_se", "pass"});
  int failures = 0;
  int id = 1;
  for (double t : {0.25, 0.5}) {
    const double h = std::pow(t, 1.0 / params.alpha);
    std::vector<double> qs;
    for (double u : us) qs.push_back(u * h);
    const HalfspaceProfile prof = halfspace_profile(
        t, qs, n, t / 256.0, base.substream(static_cast<std::uint64_t>(id++)), params, s.run);
    const double factor = std::pow(t, -params.d / params.alpha);
    for (std::size_t i = 0; i < qs.size(); ++i) {
      const TraceEstimate& a = prof.f_values[i];
      const TraceEstimate& b = ref.f_values[i];
      const double se = std::hypot(a.std_error, factor * b.std_error);
      const double diff = a.value - factor * b.value;
      const bool ok = std::abs(diff) <= s.z * se;
      failures += ok ? 0 : 1;
      sc.add({t, qs[i], a.value, a.std_error, factor * b.value, factor * b.std_error,
              se > 0 ? diff / se : 0.0, ok});
    }
  }
  s.write(sc);

  std::vector<TraceEstimate> tail;
  for (std::size_t i = 0; i < ref_q.size(); ++i) {
    if (ref_q[i] >= 2.0 - 1e-12) tail.push_back(ref.f_values[i]);
  }
  const auto [slope, slope_se] = loglog_slope(tail_q, tail);
  const double expected = -(params.d + params.alpha);
  const bool tail_ok = std::abs(slope - expected) <= 0.5;
  Table tt("c07_halfspace_tail", {"q", "f_1", "f_1_se"});
  for (std::size_t i = 0; i < tail_q.size(); ++i) {
    tt.add({tail_q[i], tail[i].value, tail[i].std_error});
  }
  s.write(tt);
  Table fit("c07_halfspace_tail_fit", {"slope", "slope_se", "expected", "tolerance", "pass"});
  fit.add({slope, slope_se, expected, 0.5, tail_ok});
  s.write(fit);
  r.passed = failures == 0 && tail_ok;
  r.detail = std::to_string(failures) + " of 6 scaling pairs outside " + num(s.z) +
             " joint s.e.; tail slope " + num(slope, 4) + " +- " + num(slope_se, 2) +
             " vs expected " + num(expected, 3) + " +- 0.5";
  return r;
}

CriterionResult residual_stability(Suite& s) {
  CriterionResult r{8, "residual_stability", true, ""};
  const auto params = ProcessParams::make(1.0, 1.0, 2);
  s.residual_params = params;
  const Domain ball = Domain::ball(2, 1.0);
  ResidualBudget budget;
  budget.spatial.n_x = s.scaled(3e5, 2000);
  budget.spatial.n_paths = 1;
  budget.profile_paths = s.scaled(1e4, 200);
  budget.profile_per_decade = 6;
  const RngStream base = s.stream(8);
  const std::vector<double> ts{0.02, 0.04, 0.08, 0.16};
  ResidualReport rep = residual_scan(ts, ball, budget, base.substream(0), params, s.run);

  Table tab("c08_residual_report",
            {"t", "z_trace", "z_trace_se", "first_term", "c2", "c2_se", "second_term",
             "c2_scaled", "residual", "residual_se", "rho", "rho_se"});
  bool finite = true;
  for (const auto& row : rep.rows) {
    tab.add({row.t, row.z.value, row.z.std_error, row.first_term, row.c2.value,
             row.c2.std_error, row.second_term, row.c2_scaled, row.residual, row.residual_se,
             row.rho, row.rho_se});
    for (double v : {row.z.value, row.first_term, row.c2.value, row.residual, row.rho}) {
      finite = finite && std::isfinite(v);
    }
    finite = finite && row.rho >= 0.0;
  }
  s.write(tab);
  const double ratio = rep.rows[0].rho / rep.rows[1].rho;
  const bool stable = ratio >= 0.5 && ratio <= 2.0;
  const bool flat = rep.slope >= -0.5 && rep.slope <= 0.5;

  // m = 0 cross-check of the second-term constant against C4.
  const std::size_t n_c = s.scaled(1e4, 200);
  const ProcessParams stable_params = params.with_mass(0.0);
  s.c4 = c4_const(n_c, 1.0 / 256.0, base.substream(1), stable_params, s.run);
  Table rm("c08_scaling_crosscheck", {"t", "c2", "c2_se", "c2_scaled", "c2_scaled_se", "c4",
                                     "c4_se", "difference_se", "pass"});
  int mismatches = 0;
  int id = 2;
  for (double t : {0.25, 0.5}) {
    const TraceEstimate c2 = c2_of_t(t, n_c, t / 256.0,
                                     base.substream(static_cast<std::uint64_t>(id++)),
                                     stable_params, s.run);
    const double f = std::pow(t, (params.d - 1) / params.alpha);
    const double se = std::hypot(f * c2.std_error, s.c4->std_error);
    const double diff = f * c2.value - s.c4->value;
    const bool ok = std::abs(diff) <= s.z * se;
    mismatches += ok ? 0 : 1;
    rm.add({t, c2.value, c2.std_error, f * c2.value, f * c2.std_error, s.c4->value,
            s.c4->std_error, se > 0 ? diff / se : 0.0, ok});
  }
  s.write(rm);
  Table fit("c08_residual_fit", {"c3", "slope", "rho_ratio_two_smallest", "stable", "flat"});
  fit.add({rep.c3, rep.slope, ratio, stable, flat});
  s.write(fit);
  s.residual = std::move(rep);

  r.passed = finite && stable && flat && mismatches == 0;
  r.detail = "C3 " + num(s.residual->c3, 4) + ", slope " + num(s.residual->slope, 3) +
             ", rho(0.02)/rho(0.04) " + num(ratio, 3) + ", C4 " + num(s.c4->value, 5) + " +- " +
             num(s.c4->std_error, 2) + ", m = 0 scaling mismatches " + std::to_string(mismatches);
  return r;
}

CriterionResult inequality_suite(Suite& s) {
  CriterionResult r{9, "inequality_suite", true, ""};
  Table tab("c09_inequalities", {"check", "case", "lhs", "rhs", "slack_se", "pass"});
  int failures = 0;
  auto add = [&](const std::string& check, const std::string& which, double lhs, double rhs,
                 double se) {
    const bool ok = lhs <= rhs + s.z * se;
    failures += ok ? 0 : 1;
    tab.add({check, which, lhs, rhs, se, ok});
  };

  const auto p1 = ProcessParams::make(1.0, 1.0, 2);
  for (double t : {0.001, 0.01, 0.1, 1.0, 10.0}) {
    add("C1(t)<=C1", "t=" + num(t), c1_of_t(t, p1), c1_const(p1), 0.0);
  }
  for (const auto& z : s.traces) {
    add("Z<=first_term", "t=" + num(z.t), z.value, std::stod(z.meta.at("first_term")),
        z.std_error);
  }
  if (s.residual) {
    for (const auto& row : s.residual->rows) {
      add("Z<=first_term", "coupled t=" + num(row.t), row.z.value, row.first_term,
          row.z.std_error);
    }
  }
  for (const auto& rep : s.comparisons) {
    const double p_mass = free_density(rep.t, 0.0, p1);
    const double p_stable = free_density(rep.t, 0.0, p1.with_mass(0.0));
    for (const auto& row : rep.rows) {
      const std::string where = "t=" + num(rep.t) + " x=(" + num(row.x[0]) + " " +
                                num(row.x[1]) + ")";
      add("r<=p(t,0)", where + " m=1", row.r_mass.value, p_mass, row.r_mass.std_error);
      add("r<=p(t,0)", where + " m=0", row.r_stable.value, p_stable, row.r_stable.std_error);
      add("r>=0", where + " m=1", 0.0, row.r_mass.value, row.r_mass.std_error);
    }
  }
  for (int d : {2, 3}) {
    for (const Domain& dom : {Domain::ball(d, 1.0), Domain::annulus(d, 1.0, 3.0)}) {
      const double R = dom.smoothness_radius();
      const double area = dom.surface();
      const std::string which = dom.describe() + " d=" + std::to_string(d);
      add("|dD|<=2^d|D|/R", which, area, std::pow(2.0, d) * dom.volume() / R, 0.0);
      // The two-sided layer bound only holds up to R/2: for a ball |dD_q|
      // vanishes at q = R.
      for (int i = 1; i <= 20; ++i) {
        const double q = 0.5 * R * i / 20.0;
        const double aq = dom.layer_area(q);
        const std::string at = which + " q=" + num(q);
        add("2^{1-d}|dD|<=|dD_q|", at, std::pow(2.0, 1 - d) * area, aq, 0.0);
        add("|dD_q|<=2^{d-1}|dD|", at, aq, std::pow(2.0, d - 1) * area, 0.0);
        add("||dD_q|-|dD||<=2^d d q|dD|/R", at, std::abs(aq - area),
            std::pow(2.0, d) * d * q * area / R, 0.0);
      }
    }
  }
  if (s.residual && s.c4) {
    const auto& p = s.residual_params;
    for (const auto& row : s.residual->rows) {
      const double f = std::exp(2.0 * p.m * row.t) * std::pow(row.t, (1 - p.d) / p.alpha);
      add("C2(t)<=C4 e^{2mt} t^{(1-d)/alpha}", "t=" + num(row.t), row.c2.value,
          s.c4->value * f, std::hypot(row.c2.std_error, f * s.c4->std_error));
    }
  }
  s.write(tab);
  r.passed = failures == 0;
  r.detail = std::to_string(failures) + " of " + std::to_string(tab.rows.size()) +
             " inequalities violated";
  return r;
}

}  // namespace

std::vector<CharfnRow> charfn_test(const ProcessParams& params, double dt,
                                   const std::vector<double>& xis, std::size_t n,
                                   const RngStream& rng, int workers, double z) {
  const IncrementSampler sampler(dt, params);
  struct Acc {
    std::vector<RunningStats> re, im;
  };
  auto parts = batched(n, rng, workers, [&](std::size_t count, RngStream& stream) {
    Acc acc{std::vector<RunningStats>(xis.size()), std::vector<RunningStats>(xis.size())};
    Point x(static_cast<std::size_t>(params.d));
    for (std::size_t i = 0; i < count; ++i) {
      sampler.increment(stream, x);
      for (std::size_t j = 0; j < xis.size(); ++j) {
        acc.re[j].add(std::cos(xis[j] * x[0]));
        acc.im[j].add(std::sin(xis[j] * x[0]));
      }
    }
    return acc;
  });
  std::vector<CharfnRow> rows(xis.size());
  const double mass = std::pow(params.m, 2.0 / params.alpha);
  for (std::size_t j = 0; j < xis.size(); ++j) {
    RunningStats re, im;
    for (const auto& p : parts) {
      re.merge(p.re[j]);
      im.merge(p.im[j]);
    }
    CharfnRow& row = rows[j];
    row.xi = xis[j];
    row.target =
        std::exp(-dt * (std::pow(mass + xis[j] * xis[j], params.alpha / 2.0) - params.m));
    row.re = re.mean();
    row.re_se = re.std_error();
    row.im = im.mean();
    row.im_se = im.std_error();
    row.pass = std::abs(row.re - row.target) <= z * row.re_se && std::abs(row.im) <= z * row.im_se;
  }
  return rows;
}

AcceptanceRow acceptance_test(const ProcessParams& params, double dt, std::size_t n,
                              const RngStream& rng, int workers, double z) {
  const IncrementSampler sampler(dt, params);
  struct Acc {
    RunningStats proposals, value;
  };
  auto parts = batched(n, rng, workers, [&](std::size_t count, RngStream& stream) {
    Acc acc;
    for (std::size_t i = 0; i < count; ++i) {
      const TemperedDraw d = sampler.tempered(stream);
      acc.proposals.add(static_cast<double>(d.proposals));
      acc.value.add(d.value);
    }
    return acc;
  });
  Acc total;
  for (const auto& p : parts) {
    total.proposals.merge(p.proposals);
    total.value.merge(p.value);
  }
  AcceptanceRow row;
  row.draws = total.proposals.count();
  row.proposals = std::llround(total.proposals.mean() * static_cast<double>(row.draws));
  row.rate = 1.0 / total.proposals.mean();
  row.rate_se = row.rate * row.rate * total.proposals.std_error();
  row.target = std::exp(-params.m * dt);
  const bool rate_ok = params.m == 0.0 ? row.rate == 1.0
                                       : std::abs(row.rate - row.target) <= z * row.rate_se;
  row.mean = total.value.mean();
  row.mean_se = total.value.std_error();
  if (params.m > 0.0) {
    row.mean_target = dt * params.beta * std::pow(params.m, (params.beta - 1.0) / params.beta);
    row.pass = rate_ok && std::abs(row.mean - row.mean_target) <= z * row.mean_se;
  } else {
    // The stable law has no mean.
    row.mean_target = std::numeric_limits<double>::infinity();
    row.pass = rate_ok;
  }
  return row;
}

std::vector<LaplaceRow> laplace_sampler_test(double beta, double dt,
                                             const std::vector<double>& lambdas, std::size_t n,
                                             const RngStream& rng, int workers, double z) {
  const ProcessParams params = ProcessParams::make(2.0 * beta, 0.0, 2);
  const IncrementSampler sampler(dt, params);
  auto parts = batched(n, rng, workers, [&](std::size_t count, RngStream& stream) {
    std::vector<RunningStats> acc(lambdas.size());
    for (std::size_t i = 0; i < count; ++i) {
      const double u = sampler.stable(stream);
      for (std::size_t j = 0; j < lambdas.size(); ++j) acc[j].add(std::exp(-lambdas[j] * u));
    }
    return acc;
  });
  std::vector<LaplaceRow> rows(lambdas.size());
  for (std::size_t j = 0; j < lambdas.size(); ++j) {
    RunningStats st;
    for (const auto& p : parts) st.merge(p[j]);
    LaplaceRow& row = rows[j];
    row.beta = beta;
    row.lambda = lambdas[j];
    row.target = std::exp(-dt * std::pow(lambdas[j], beta));
    row.mean = st.mean();
    row.se = st.std_error();
    row.pass = std::abs(row.mean - row.target) <= z * row.se;
  }
  return rows;
}

double subordinator_laplace_quadrature(double beta, double lambda,
                                       const SubordinatorDensityOptions& opt) {
  if (!(lambda >= 0.0)) throw DomainError("lambda must be >= 0");
  // In s = log u the integrand is e^{-lambda u} theta(u) u. Past u_hi the
  // remainder is below e^{-60}, or bounded by the u^{-beta} tail when lambda
  // is small.
  const double s_lo = std::log(1e-12);
  const double u_hi = lambda > 0.0 ? std::max(10.0, 60.0 / lambda) : 1e12;
  const double s_hi = std::log(u_hi);
  std::vector<double> breaks;
  for (double s = s_lo; s < s_hi; s += 1.0) breaks.push_back(s);
  breaks.push_back(s_hi);
  quad::Options qo;
  qo.rel_tol = 1e-12;
  qo.abs_tol = 1e-15;
  const auto res = quad::integrate_pieces(
      [&](double s) {
        const double u = std::exp(s);
        return std::exp(-lambda * u) * stable_subordinator_density(u, beta, opt) * u;
      },
      breaks, qo);
  if (!res.converged) throw QuadratureFailure("laplace transform of theta", res.value, res.abs_error);
  return res.value;
}

bool VerifyReport::all_passed() const {
  return std::all_of(results.begin(), results.end(),
                     [](const CriterionResult& r) { return r.passed; });
}

std::vector<std::string> list_artifacts(const std::string& dir) {
  std::vector<std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), dir).generic_string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool same_artifacts(const std::string& a, const std::string& b,
                    std::vector<std::string>* differences) {
  const auto la = list_artifacts(a);
  const auto lb = list_artifacts(b);
  bool same = la == lb;
  if (!same && differences) differences->push_back("file lists differ");
  auto read = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  };
  for (const auto& f : la) {
    if (std::find(lb.begin(), lb.end(), f) == lb.end()) continue;
    if (read(fs::path(a) / f) != read(fs::path(b) / f)) {
      same = false;
      if (differences) differences->push_back(f);
    }
  }
  return same;
}

VerifyReport run_verify(const ExperimentConfig& cfg, const std::string& out_dir,
                        const VerifyOptions& opts) {
  cfg.validate();
  fs::create_directories(out_dir);
  Suite s{cfg, out_dir, parse_format(cfg.format), cfg.entries(), opts.log, cfg.z,
          cfg.run_options(), {}, {}, {}, {}, ProcessParams{}};

  using Check = CriterionResult (*)(Suite&);
  const std::vector<std::pair<int, Check>> checks{
      {1, subordinator_oracle}, {2, laplace_identity},  {3, free_density_oracle},
      {4, sampler_law},         {5, small_time_limit}, {6, stable_comparison},
      {7, halfspace_scaling},   {8, residual_stability}, {9, inequality_suite}};
  const std::vector<std::string> names{"",
                                       "subordinator_density_oracle",
                                       "laplace_identity",
                                       "free_density_oracle",
                                       "sampler_law",
                                       "small_time_limit",
                                       "stable_comparison",
                                       "halfspace_scaling",
                                       "residual_stability",
                                       "inequality_suite",
                                       "determinism"};
  VerifyReport report;
  for (const auto& [id, check] : checks) {
    const auto start = std::chrono::steady_clock::now();
    CriterionResult res;
    try {
      res = check(s);
    } catch (const std::exception& e) {
      res = {id, names[static_cast<std::size_t>(id)], false, std::string("error: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    s.note("criterion " + std::to_string(id) + " " + res.name + ": " +
           (res.passed ? "PASS" : "FAIL") + " (" + num(secs, 3) + " s) " + res.detail);
    report.results.push_back(res);
  }

  if (opts.determinism) {
    const auto start = std::chrono::steady_clock::now();
    CriterionResult res{10, names[10], false, ""};
    try {
      ExperimentConfig small = cfg;
      small.budget_scale = cfg.budget_scale * opts.determinism_scale;
      const fs::path root = fs::path(out_dir) / "determinism";
      fs::remove_all(root);
      VerifyOptions inner;
      inner.determinism = false;
      run_verify(small, (root / "run_a").string(), inner);
      run_verify(small, (root / "run_b").string(), inner);
      std::vector<std::string> diffs;
      res.passed = same_artifacts((root / "run_a").string(), (root / "run_b").string(), &diffs);
      const auto files = list_artifacts((root / "run_a").string());
      Table tab("c10_determinism", {"file", "identical"});
      for (const auto& f : files) {
        tab.add({f, std::find(diffs.begin(), diffs.end(), f) == diffs.end()});
      }
      s.write(tab);
      res.detail = std::to_string(files.size()) + " artifacts compared at budget scale " +
                   num(small.budget_scale, 3) + ", " + std::to_string(diffs.size()) +
                   " differ";
    } catch (const std::exception& e) {
      res.detail = std::string("error: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    s.note("criterion 10 determinism: " + std::string(res.passed ? "PASS" : "FAIL") + " (" +
           num(secs, 3) + " s) " + res.detail);
    report.results.push_back(res);
  }

  Table summary("verify_summary", {"criterion", "name", "passed", "detail"});
  for (const auto& r : report.results) {
    summary.add({static_cast<std::int64_t>(r.id), r.name, r.passed, r.detail});
  }
  s.write(summary);
  return report;
}

}  // namespace relstable
