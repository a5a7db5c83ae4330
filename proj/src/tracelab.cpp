#include "relstable/tracelab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "relstable/errors.hpp"
#include "relstable/parallel.hpp"
#include "relstable/stats.hpp"

namespace relstable {

namespace {

constexpr int kMaxLevels = 3;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double v = a[i] - b[i];
    s += v * v;
  }
  return std::sqrt(s);
}

double richardson_ratio(const RunOptions& opts, const ProcessParams& params) {
  const double order =
      opts.richardson_order > 0.0 ? opts.richardson_order : std::min(1.0, 1.0 / params.alpha);
  return std::pow(2.0, order);
}

void check_options(const RunOptions& opts) {
  if (opts.levels < 1 || opts.levels > kMaxLevels) {
    throw InvalidParameter("levels must be 1, 2 or 3");
  }
  if (opts.batch_size == 0) throw InvalidParameter("batch_size must be positive");
}

// A region a path is monitored against: either a Domain or the tangent
// half-space {y : (y - x).n + offset > 0} of a start point x.
struct Monitor {
  const Domain* domain = nullptr;
  Point normal;
  double offset = 0.0;
  double weight = 1.0;

  bool inside(const Point& y, const Point& x) const {
    if (domain != nullptr) return domain->contains(y);
    double s = offset;
    for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - x[i]) * normal[i];
    return s > 0.0;
  }
};

struct PathScore {
  double extrapolated = 0.0;
  double raw = 0.0;
  double drift = 0.0;
  std::size_t steps = 0;
};

struct ScoreStats {
  RunningStats extrapolated;
  RunningStats raw;
  RunningStats drift;

  void add(const PathScore& s) {
    extrapolated.add(s.extrapolated);
    raw.add(s.raw);
    drift.add(s.drift);
  }
  void merge(const ScoreStats& o) {
    extrapolated.merge(o.extrapolated);
    raw.merge(o.raw);
    drift.merge(o.drift);
  }
};

class PathScorer {
 public:
  PathScorer(const KernelBank& bank, const ProcessParams& params, const RunOptions& opts)
      : bank_(bank),
        sampler_(bank.dt(), params),
        levels_(bank.levels()),
        ratio_(richardson_ratio(opts, params)) {}

  // One path from x; the score is sum_m weight_m * p(t - tau_m, X_{tau_m} - x).
  PathScore run(const Point& x, const std::vector<Monitor>& monitors, RngStream& rng) const {
    const std::size_t n_mon = monitors.size();
    double level_score[kMaxLevels] = {0.0, 0.0, 0.0};
    bool done[8][kMaxLevels] = {};
    std::size_t remaining = n_mon * static_cast<std::size_t>(levels_);
    Point pos = x;
    Point inc(x.size());
    const std::size_t steps = bank_.steps();
    std::size_t k = 1;
    for (; k <= steps && remaining > 0; ++k) {
      sampler_.increment(rng, inc);
      for (std::size_t i = 0; i < pos.size(); ++i) pos[i] += inc[i];
      for (std::size_t mi = 0; mi < n_mon; ++mi) {
        const Monitor& mon = monitors[mi];
        // A coarse grid is a subset of the fine one, so it cannot have
        // exited before the fine grid has.
        if (done[mi][levels_ - 1]) continue;
        bool outside_known = false;
        bool outside = false;
        for (int j = 0; j < levels_; ++j) {
          if (done[mi][j]) continue;
          if ((k & ((std::size_t{1} << j) - 1)) != 0) continue;
          if (!outside_known) {
            outside = !mon.inside(pos, x);
            outside_known = true;
          }
          if (!outside) break;
          done[mi][j] = true;
          --remaining;
          const std::size_t kj = k >> j;
          level_score[j] += mon.weight * bank_.eval(j, kj, distance(pos, x));
        }
      }
    }
    PathScore out;
    out.steps = k - 1;
    out.raw = level_score[0];
    if (levels_ == 1) {
      out.extrapolated = level_score[0];
    } else {
      const double c = ratio_;
      const double e01 = (c * level_score[0] - level_score[1]) / (c - 1.0);
      out.extrapolated = e01;
      if (levels_ == 2) {
        out.drift = e01 - level_score[0];
      } else {
        const double e12 = (c * level_score[1] - level_score[2]) / (c - 1.0);
        out.drift = e01 - e12;
      }
    }
    return out;
  }

 private:
  const KernelBank& bank_;
  IncrementSampler sampler_;
  int levels_;
  double ratio_;
};

// n paths from x in batches; batch b draws from rng.substream(b).
ScoreStats run_paths(const PathScorer& scorer, const Point& x,
                     const std::vector<Monitor>& monitors, std::size_t n_paths,
                     const RngStream& rng, const RunOptions& opts) {
  const std::size_t n_batches = (n_paths + opts.batch_size - 1) / opts.batch_size;
  std::vector<ScoreStats> partial(n_batches);
  parallel_for(n_batches, opts.workers, [&](std::size_t b) {
    RngStream stream = rng.substream(b);
    const std::size_t begin = b * opts.batch_size;
    const std::size_t end = std::min(n_paths, begin + opts.batch_size);
    ScoreStats local;
    for (std::size_t i = begin; i < end; ++i) local.add(scorer.run(x, monitors, stream));
    partial[b] = local;
  });
  ScoreStats total;
  for (const auto& p : partial) total.merge(p);
  return total;
}

TraceEstimate to_estimate(const ScoreStats& s, double t, double dt) {
  TraceEstimate e;
  e.value = s.extrapolated.mean();
  e.std_error = s.extrapolated.std_error();
  e.n_samples = s.extrapolated.count();
  e.raw_value = s.raw.mean();
  e.bias = s.drift.mean();
  e.t = t;
  e.dt = dt;
  return e;
}

void label(TraceEstimate& e, const std::string& estimator, const ProcessParams& params,
           const RunOptions& opts) {
  e.meta["estimator"] = estimator;
  e.meta["params"] = params.describe();
  e.meta["levels"] = std::to_string(opts.levels);
}

void check_horizon(double t, double dt) {
  if (!(t > 0.0) || !(dt > 0.0) || !(t > dt)) {
    throw PreconditionError("need t > dt > 0 (t=" + fmt(t) + ", dt=" + fmt(dt) + ")");
  }
}

TraceEstimate r_estimate_with(const PathScorer& scorer, const KernelBank& bank, const Point& x,
                              const Domain& domain, std::size_t n_paths, const RngStream& rng,
                              const ProcessParams& params, const RunOptions& opts) {
  if (n_paths < 100) {
    throw PreconditionError("r_estimate needs at least 100 paths, got " +
                            std::to_string(n_paths));
  }
  if (!domain.contains(x)) throw PreconditionError("start point is not inside the domain");
  std::vector<Monitor> monitors(1);
  monitors[0].domain = &domain;
  TraceEstimate e = to_estimate(run_paths(scorer, x, monitors, n_paths, rng, opts), bank.t(),
                                bank.dt());
  label(e, "r_estimate", params, opts);
  e.meta["domain"] = domain.describe();
  return e;
}

// Nonuniform composite Simpson weights for int g(s) ds on the nodes s_i; an
// odd number of intervals ends with a trapezoid.
std::vector<double> simpson_weights(const std::vector<double>& s) {
  const std::size_t n = s.size();
  std::vector<double> w(n, 0.0);
  if (n < 2) return w;
  std::size_t i = 0;
  for (; i + 2 < n; i += 2) {
    const double h1 = s[i + 1] - s[i];
    const double h2 = s[i + 2] - s[i + 1];
    const double c = (h1 + h2) / 6.0;
    w[i] += c * (2.0 - h2 / h1);
    w[i + 1] += c * (h1 + h2) * (h1 + h2) / (h1 * h2);
    w[i + 2] += c * (2.0 - h1 / h2);
  }
  if (i + 1 < n) {
    const double h = s[i + 1] - s[i];
    w[i] += 0.5 * h;
    w[i + 1] += 0.5 * h;
  }
  return w;
}

// Weights for int_{q_0}^{q_{n-1}} f(q) dq with the rule applied in log q.
std::vector<double> log_q_weights(const std::vector<double>& q) {
  std::vector<double> s(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) s[i] = std::log(q[i]);
  std::vector<double> w = simpson_weights(s);
  for (std::size_t i = 0; i < q.size(); ++i) w[i] *= q[i];
  return w;
}

struct TailFit {
  double value = 0.0;
  double std_error = 0.0;
  double slope = 0.0;
};

// Power law a q^b fitted to the last decade of the profile; returns
// int_{q_last}^inf a q^b dq.
TailFit fit_tail(const HalfspaceProfile& profile) {
  const double q_last = profile.q_grid.back();
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < profile.q_grid.size(); ++i) {
    const double q = profile.q_grid[i];
    const double f = profile.f_values[i].value;
    if (q >= q_last / 10.0 * (1.0 - 1e-12) && f > 0.0) {
      xs.push_back(std::log(q));
      ys.push_back(std::log(f));
    }
  }
  if (xs.size() < 2) {
    throw TailFailure("fewer than two positive profile values on the last decade");
  }
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  TailFit fit;
  fit.slope = sxy / sxx;
  if (!(fit.slope < -1.0)) {
    throw TailFailure("tail slope " + fmt(fit.slope) + " is not below -1");
  }
  const double f_end = std::exp(my + fit.slope * (std::log(q_last) - mx));
  fit.value = f_end * q_last / (-fit.slope - 1.0);
  const TraceEstimate& last = profile.f_values.back();
  const double rel = last.value > 0.0 ? last.std_error / last.value : 1.0;
  fit.std_error = fit.value * rel;
  return fit;
}

std::vector<double> log_spaced(double a, double b, std::size_t intervals) {
  std::vector<double> out(intervals + 1);
  const double la = std::log(a);
  const double lb = std::log(b);
  for (std::size_t i = 0; i <= intervals; ++i) {
    out[i] = std::exp(la + (lb - la) * static_cast<double>(i) / static_cast<double>(intervals));
  }
  out.front() = a;
  out.back() = b;
  return out;
}

std::size_t even_intervals(double a, double b, int per_decade) {
  auto n = static_cast<std::size_t>(std::ceil(per_decade * std::log10(b / a)));
  n = std::max<std::size_t>(n, 2);
  return n + (n % 2);
}

HalfspaceProfile profile_with(const PathScorer& scorer, const KernelBank& bank,
                              const std::vector<double>& q_grid, std::size_t n_paths,
                              const RngStream& rng, const ProcessParams& params,
                              const RunOptions& opts) {
  if (q_grid.empty()) throw PreconditionError("empty q grid");
  for (std::size_t i = 0; i < q_grid.size(); ++i) {
    if (!(q_grid[i] > 0.0)) throw PreconditionError("q grid must be positive");
    if (i > 0 && !(q_grid[i] > q_grid[i - 1])) throw PreconditionError("q grid must increase");
  }
  const Domain half = Domain::halfspace(params.d);
  HalfspaceProfile profile;
  profile.t = bank.t();
  profile.q_grid = q_grid;
  profile.f_values.reserve(q_grid.size());
  for (std::size_t i = 0; i < q_grid.size(); ++i) {
    Point x(static_cast<std::size_t>(params.d), 0.0);
    x[0] = q_grid[i];
    TraceEstimate e =
        r_estimate_with(scorer, bank, x, half, n_paths, rng.substream(i), params, opts);
    e.meta["estimator"] = "halfspace_profile";
    e.meta["q"] = fmt(q_grid[i]);
    profile.f_values.push_back(std::move(e));
  }
  return profile;
}

struct SpatialResult {
  double value = 0.0;
  double std_error = 0.0;
  double raw = 0.0;
  double bias = 0.0;
  std::int64_t n_paths = 0;
  std::int64_t n_points = 0;
  std::size_t strata = 0;
};

std::vector<std::size_t> allocate(std::size_t n, const std::vector<double>& weight,
                                  std::size_t floor_n) {
  const double total = std::accumulate(weight.begin(), weight.end(), 0.0);
  std::vector<std::size_t> count(weight.size(), 0);
  for (std::size_t s = 0; s < weight.size(); ++s) {
    if (!(weight[s] > 0.0) && floor_n == 0) continue;
    const double share = total > 0.0 ? static_cast<double>(n) * weight[s] / total : 0.0;
    count[s] = std::max(floor_n, static_cast<std::size_t>(std::llround(share)));
  }
  return count;
}

struct PointScore {
  double extrapolated = 0.0;
  double raw = 0.0;
  double drift = 0.0;
  double steps = 0.0;
};

// int_D score(x) dx with score = r_D(t,x,x), or r_D - r_{H(x)} when coupled.
//
// Points are drawn uniformly in layers of delta. Point i of layer s uses
// rng.substream(s).substream(i) for both its position and its paths. The
// plain estimator allocates points by volume times the envelope
// min(t^{-d/alpha}, t/delta^{d+alpha}). The coupled score has a different
// shape, so its layers are refined below t^{1/alpha} and a pilot fifth of the
// budget fixes a Neyman allocation (volume * sd / sqrt(cost)) for the rest.
SpatialResult spatial_integral(const PathScorer& scorer, const Domain& domain, double t,
                               bool coupled, const SpatialBudget& budget, const RngStream& rng,
                               const ProcessParams& params, const RunOptions& opts) {
  if (!domain.bounded()) throw PreconditionError("spatial integral needs a bounded domain");
  if (budget.n_paths == 0) throw InvalidParameter("n_paths must be positive");
  std::vector<double> edges = trace_strata(t, domain, params);
  if (coupled) {
    const double h = std::min(edges[1], std::pow(t, 1.0 / params.alpha));
    std::vector<double> fine{0.0};
    for (double f : {1.0 / 64.0, 1.0 / 16.0, 0.125, 0.25, 0.5}) fine.push_back(f * h);
    fine.insert(fine.end(), edges.begin() + 1, edges.end());
    edges = fine;
  }
  const std::size_t n_strata = edges.size() - 1;
  const std::size_t floor_n = std::max<std::size_t>(budget.min_per_stratum, 2);
  if (budget.n_x < floor_n * n_strata) {
    throw InsufficientBudget("n_x=" + std::to_string(budget.n_x) + " cannot give " +
                             std::to_string(floor_n) + " points to each of " +
                             std::to_string(n_strata) + " strata");
  }
  const double cap = std::pow(t, -params.d / params.alpha);
  std::vector<double> volume(n_strata);
  std::vector<double> weight(n_strata);
  for (std::size_t s = 0; s < n_strata; ++s) {
    volume[s] = domain.layer_volume(edges[s], edges[s + 1]);
    const double q = edges[s];
    const double env = q > 0.0 ? std::min(cap, t / std::pow(q, params.d + params.alpha)) : cap;
    weight[s] = volume[s] * env;
  }

  std::vector<std::vector<PointScore>> scores(n_strata);
  // Extends every layer s to count[s] points.
  auto run = [&](const std::vector<std::size_t>& count) {
    std::vector<std::pair<std::size_t, std::size_t>> todo;
    for (std::size_t s = 0; s < n_strata; ++s) {
      const std::size_t have = scores[s].size();
      if (count[s] > have) scores[s].resize(count[s]);
      for (std::size_t i = have; i < count[s]; ++i) todo.emplace_back(s, i);
    }
    constexpr std::size_t kChunk = 16;
    const std::size_t n_chunks = (todo.size() + kChunk - 1) / kChunk;
    parallel_for(n_chunks, opts.workers, [&](std::size_t c) {
      const std::size_t end = std::min(todo.size(), (c + 1) * kChunk);
      std::vector<Monitor> monitors(coupled ? 2 : 1);
      monitors[0].domain = &domain;
      for (std::size_t j = c * kChunk; j < end; ++j) {
        const auto [s, i] = todo[j];
        RngStream stream = rng.substream(s).substream(i);
        const Point x = domain.sample_layer(edges[s], edges[s + 1], stream);
        if (coupled) {
          monitors[1].normal = domain.inward_normal(x);
          monitors[1].offset = domain.delta(x);
          monitors[1].weight = -1.0;
        }
        ScoreStats st;
        double steps = 0.0;
        for (std::size_t k = 0; k < budget.n_paths; ++k) {
          const PathScore ps = scorer.run(x, monitors, stream);
          st.add(ps);
          steps += static_cast<double>(ps.steps);
        }
        scores[s][i] = {st.extrapolated.mean(), st.raw.mean(), st.drift.mean(), steps};
      }
    });
  };

  if (!coupled) {
    run(allocate(budget.n_x, weight, floor_n));
  } else {
    const std::size_t pilot = std::max(budget.n_x / 5, floor_n * n_strata);
    run(allocate(pilot, weight, floor_n));
    std::vector<double> neyman(n_strata, 0.0);
    for (std::size_t s = 0; s < n_strata; ++s) {
      RunningStats st;
      double cost = 0.0;
      for (const auto& p : scores[s]) {
        st.add(p.extrapolated);
        cost += p.steps;
      }
      cost = std::max(1.0, cost / static_cast<double>(scores[s].size()));
      neyman[s] = volume[s] * std::sqrt(st.variance() / cost);
    }
    if (std::accumulate(neyman.begin(), neyman.end(), 0.0) > 0.0) {
      std::size_t used = 0;
      for (const auto& v : scores) used += v.size();
      std::vector<std::size_t> extra = allocate(budget.n_x > used ? budget.n_x - used : 0,
                                                neyman, 0);
      for (std::size_t s = 0; s < n_strata; ++s) extra[s] += scores[s].size();
      run(extra);
    }
  }

  SpatialResult out;
  out.strata = n_strata;
  double var = 0.0;
  for (std::size_t s = 0; s < n_strata; ++s) {
    const std::size_t count = scores[s].size();
    if (count == 0) continue;
    RunningStats ext;
    double raw = 0.0;
    double drift = 0.0;
    for (const auto& p : scores[s]) {
      ext.add(p.extrapolated);
      raw += p.raw;
      drift += p.drift;
    }
    const auto n = static_cast<double>(count);
    out.value += volume[s] * ext.mean();
    var += volume[s] * volume[s] * ext.variance() / n;
    out.raw += volume[s] * raw / n;
    out.bias += volume[s] * drift / n;
    out.n_points += static_cast<std::int64_t>(count);
  }
  out.n_paths = out.n_points * static_cast<std::int64_t>(budget.n_paths);
  out.std_error = std::sqrt(var);
  return out;
}

double spatial_dt(double t, const SpatialBudget& budget) {
  return budget.dt > 0.0 ? budget.dt : t / 256.0;
}

double first_term(double t, const Domain& domain, const ProcessParams& params) {
  return c1_of_t(t, params) * std::exp(params.m * t) * domain.volume() /
         std::pow(t, params.d / params.alpha);
}

}  // namespace

bool agree(const TraceEstimate& a, const TraceEstimate& b, double z) {
  const double se = std::hypot(a.std_error, b.std_error);
  return std::abs(a.value - b.value) <= z * se;
}

ExitEvent first_exit(const PathGrid& path, const Domain& domain) {
  if (path.positions.empty() || !domain.contains(path.positions.front())) {
    throw PreconditionError("path does not start inside the domain");
  }
  ExitEvent ev;
  for (std::size_t k = 1; k < path.positions.size(); ++k) {
    if (!domain.contains(path.positions[k])) {
      ev.step = k;
      ev.position = path.positions[k];
      break;
    }
  }
  return ev;
}

std::size_t fine_steps(double t, double dt, int levels) {
  check_horizon(t, dt);
  const std::size_t unit = std::size_t{1} << (levels - 1);
  const auto n = static_cast<std::size_t>(std::ceil(t / dt * (1.0 - 1e-12)));
  return std::max(unit, (n + unit - 1) / unit * unit);
}

KernelBank::KernelBank(double t, std::size_t steps, int levels, const ProcessParams& params)
    : t_(t), steps_(steps), levels_(levels), params_(params) {
  if (!(t > 0.0)) throw InvalidParameter("t must be positive");
  if (levels < 1 || levels > kMaxLevels) throw InvalidParameter("levels must be 1, 2 or 3");
  if (steps == 0 || steps % (std::size_t{1} << (levels - 1)) != 0) {
    throw InvalidParameter("steps must be a positive multiple of 2^(levels-1)");
  }
  const double dt = t / static_cast<double>(steps);
  std::shared_ptr<const RadialKernelTable> shared;
  if (params.m == 0.0) shared = std::make_shared<RadialKernelTable>(0.0, params);
  tables_.resize(static_cast<std::size_t>(levels));
  times_.resize(static_cast<std::size_t>(levels));
  for (int j = 0; j < levels; ++j) {
    const double dtj = dt * static_cast<double>(std::size_t{1} << j);
    const std::size_t n = steps >> j;
    auto& times = times_[static_cast<std::size_t>(j)];
    auto& tables = tables_[static_cast<std::size_t>(j)];
    times.resize(n);
    tables.resize(n);
    for (std::size_t k = 1; k <= n; ++k) {
      const double s = t - (static_cast<double>(k) - 0.5) * dtj;
      times[k - 1] = s;
      tables[k - 1] = shared ? shared : std::make_shared<RadialKernelTable>(params.m * s, params);
    }
  }
}

double KernelBank::eval(int level, std::size_t k, double r) const {
  const auto j = static_cast<std::size_t>(level);
  return tables_[j][k - 1]->eval(times_[j][k - 1], r);
}

TraceEstimate r_estimate(double t, const Point& x, const Domain& domain, std::size_t n_paths,
                         double dt, const RngStream& rng, const ProcessParams& params,
                         const RunOptions& opts) {
  check_options(opts);
  if (x.size() != static_cast<std::size_t>(params.d) || domain.dim() != params.d) {
    throw InvalidParameter("dimension mismatch between point, domain and params");
  }
  const KernelBank bank(t, fine_steps(t, dt, opts.levels), opts.levels, params);
  const PathScorer scorer(bank, params, opts);
  return r_estimate_with(scorer, bank, x, domain, n_paths, rng, params, opts);
}

HalfspaceProfile halfspace_profile(double t, const std::vector<double>& q_grid,
                                   std::size_t n_paths, double dt, const RngStream& rng,
                                   const ProcessParams& params, const RunOptions& opts) {
  check_options(opts);
  const KernelBank bank(t, fine_steps(t, dt, opts.levels), opts.levels, params);
  const PathScorer scorer(bank, params, opts);
  return profile_with(scorer, bank, q_grid, n_paths, rng, params, opts);
}

std::vector<double> halfspace_q_grid(double t, const ProcessParams& params, double breakpoint,
                                     int per_decade) {
  if (!(t > 0.0)) throw InvalidParameter("t must be positive");
  if (per_decade < 1) throw InvalidParameter("per_decade must be positive");
  const double h = std::pow(t, 1.0 / params.alpha);
  const double q_lo = 0.01 * h;
  double q_hi = std::max(5.0 * h, 3.0);
  if (breakpoint > q_hi) q_hi = breakpoint;
  if (!(breakpoint > q_lo && breakpoint < q_hi)) {
    return log_spaced(q_lo, q_hi, even_intervals(q_lo, q_hi, per_decade));
  }
  std::vector<double> grid =
      log_spaced(q_lo, breakpoint, even_intervals(q_lo, breakpoint, per_decade));
  const std::vector<double> upper =
      log_spaced(breakpoint, q_hi, even_intervals(breakpoint, q_hi, per_decade));
  grid.insert(grid.end(), upper.begin() + 1, upper.end());
  return grid;
}

TraceEstimate integrate_profile(const HalfspaceProfile& profile, const ProcessParams& params) {
  const auto& q = profile.q_grid;
  if (q.size() < 3) throw PreconditionError("profile needs at least three nodes");
  const double p0 = free_density(profile.t, 0.0, params);
  const std::vector<double> w = log_q_weights(q);
  double value = 0.5 * q.front() * p0;
  double var = 0.0;
  double raw = value;
  double bias = 0.0;
  std::int64_t n = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    double wi = w[i];
    if (i == 0) wi += 0.5 * q.front();
    const TraceEstimate& f = profile.f_values[i];
    value += wi * f.value;
    raw += wi * f.raw_value;
    bias += wi * f.bias;
    var += wi * wi * f.std_error * f.std_error;
    n += f.n_samples;
  }
  const TailFit tail = fit_tail(profile);
  TraceEstimate e;
  e.value = value + tail.value;
  e.raw_value = raw + tail.value;
  e.bias = bias;
  e.std_error = std::sqrt(var + tail.std_error * tail.std_error);
  e.n_samples = n;
  e.t = profile.t;
  e.dt = profile.f_values.front().dt;
  e.meta["estimator"] = "c2_of_t";
  e.meta["params"] = params.describe();
  e.meta["tail"] = fmt(tail.value);
  e.meta["tail_slope"] = fmt(tail.slope);
  e.meta["q_max"] = fmt(q.back());
  e.meta["nodes"] = std::to_string(q.size());
  return e;
}

TraceEstimate c2_of_t(double t, std::size_t n_paths, double dt, const RngStream& rng,
                      const ProcessParams& params, const RunOptions& opts) {
  const HalfspaceProfile profile =
      halfspace_profile(t, halfspace_q_grid(t, params), n_paths, dt, rng, params, opts);
  TraceEstimate e = integrate_profile(profile, params);
  e.meta["levels"] = std::to_string(opts.levels);
  return e;
}

TraceEstimate c4_const(std::size_t n_paths, double dt, const RngStream& rng,
                       const ProcessParams& params, const RunOptions& opts) {
  TraceEstimate e = c2_of_t(1.0, n_paths, dt, rng, params.with_mass(0.0), opts);
  e.meta["estimator"] = "c4_const";
  return e;
}

std::vector<double> trace_strata(double t, const Domain& domain, const ProcessParams& params) {
  if (!domain.bounded()) throw PreconditionError("strata need a bounded domain");
  const double top = domain.max_delta();
  const double half = 0.5 * std::min(domain.smoothness_radius(), top);
  const double h = std::pow(t, 1.0 / params.alpha);
  std::vector<double> edges{0.0};
  // Unit layers for the first few widths, then doubling widths.
  double q = h;
  int linear = 1;
  while (q < half) {
    edges.push_back(q);
    q = linear < 4 ? q + h : 2.0 * q;
    ++linear;
  }
  if (half > edges.back()) edges.push_back(half);
  if (top > edges.back()) edges.push_back(top);
  return edges;
}

TraceEstimate z_trace(double t, const Domain& domain, const SpatialBudget& budget,
                      const RngStream& rng, const ProcessParams& params,
                      const RunOptions& opts) {
  check_options(opts);
  const double dt = spatial_dt(t, budget);
  const KernelBank bank(t, fine_steps(t, dt, opts.levels), opts.levels, params);
  const PathScorer scorer(bank, params, opts);
  const SpatialResult integral =
      spatial_integral(scorer, domain, t, false, budget, rng, params, opts);
  const double first = first_term(t, domain, params);
  TraceEstimate e;
  e.value = first - integral.value;
  e.raw_value = first - integral.raw;
  e.bias = -integral.bias;
  e.std_error = integral.std_error;
  e.n_samples = integral.n_paths;
  e.t = t;
  e.dt = bank.dt();
  label(e, "z_trace", params, opts);
  e.meta["domain"] = domain.describe();
  e.meta["first_term"] = fmt(first);
  e.meta["points"] = std::to_string(integral.n_points);
  e.meta["strata"] = std::to_string(integral.strata);
  return e;
}

ResidualReport residual_scan(const std::vector<double>& t_grid, const Domain& domain,
                             const ResidualBudget& budget, const RngStream& rng,
                             const ProcessParams& params, const RunOptions& opts) {
  check_options(opts);
  if (t_grid.empty()) throw PreconditionError("empty t grid");
  const double R = domain.smoothness_radius();
  const double surface = domain.surface();
  const double top = domain.max_delta();
  ResidualReport report;
  for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
    const double t = t_grid[ti];
    if (!(std::pow(t, 1.0 / params.alpha) <= 0.5 * R)) {
      throw PreconditionError("t^{1/alpha} must not exceed R/2 (t=" + fmt(t) + ")");
    }
    const double dt = spatial_dt(t, budget.spatial);
    const KernelBank bank(t, fine_steps(t, dt, opts.levels), opts.levels, params);
    const PathScorer scorer(bank, params, opts);
    const RngStream t_stream = rng.substream(ti);

    const std::vector<double> grid =
        halfspace_q_grid(t, params, top, budget.profile_per_decade);
    const HalfspaceProfile profile = profile_with(scorer, bank, grid, budget.profile_paths,
                                                  t_stream.substream(0), params, opts);
    const TraceEstimate c2 = integrate_profile(profile, params);

    // Co-area part: int_0^top (|dD| - |dD_q|) f_H dq + |dD| int_top^inf f_H dq.
    std::size_t n_in = 0;
    while (n_in < grid.size() && grid[n_in] <= top * (1.0 + 1e-12)) ++n_in;
    const std::vector<double> w_full = log_q_weights(grid);
    const std::vector<double> w_in =
        log_q_weights(std::vector<double>(grid.begin(), grid.begin() + n_in));
    const double p0 = free_density(t, 0.0, params);
    const double q1 = grid.front();
    double coarea = 0.0;
    double coarea_var = 0.0;
    double inner = 0.5 * q1 * surface * p0;
    double inner_var = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const TraceEstimate& f = profile.f_values[i];
      const double level = i < n_in ? domain.level_set_area(std::min(grid[i], top)) : 0.0;
      double a_in = i < n_in ? w_in[i] * level : 0.0;
      double a_full = w_full[i];
      if (i == 0) {
        a_in += 0.5 * q1 * level;
        a_full += 0.5 * q1;
      }
      const double c = surface * a_full - a_in;
      coarea += c * f.value;
      coarea_var += c * c * f.std_error * f.std_error;
      inner += a_in * f.value;
      inner_var += a_in * a_in * f.std_error * f.std_error;
    }
    const TailFit tail = fit_tail(profile);
    coarea += surface * tail.value;
    coarea_var += surface * surface * tail.std_error * tail.std_error;

    const SpatialResult cv = spatial_integral(scorer, domain, t, true, budget.spatial,
                                              t_stream.substream(1), params, opts);

    ResidualRow row;
    row.t = t;
    row.first_term = first_term(t, domain, params);
    row.c2 = c2;
    row.second_term = c2.value * surface;
    row.c2_scaled = c2.value * std::pow(t, (params.d - 1) / params.alpha);
    row.z.value = row.first_term - cv.value - inner;
    row.z.std_error = std::sqrt(cv.std_error * cv.std_error + inner_var);
    row.z.raw_value = row.first_term - cv.raw - inner;
    row.z.bias = -cv.bias;
    row.z.n_samples = cv.n_paths + c2.n_samples;
    row.z.t = t;
    row.z.dt = bank.dt();
    label(row.z, "z_trace_coupled", params, opts);
    row.z.meta["domain"] = domain.describe();
    row.residual = coarea - cv.value;
    row.residual_se = std::sqrt(coarea_var + cv.std_error * cv.std_error);
    const double scale = R * R * std::pow(t, (params.d - 2) / params.alpha) *
                         std::exp(-2.0 * params.m * t) / domain.volume();
    row.rho = std::abs(row.residual) * scale;
    row.rho_se = row.residual_se * scale;
    report.rows.push_back(std::move(row));
  }
  report.c3 = 0.0;
  for (const auto& r : report.rows) report.c3 = std::max(report.c3, r.rho);
  if (report.rows.size() >= 2) {
    double mx = 0.0;
    double my = 0.0;
    const auto n = static_cast<double>(report.rows.size());
    const double tiny = std::numeric_limits<double>::min();
    for (const auto& r : report.rows) {
      mx += std::log(r.t);
      my += std::log(std::max(r.rho, tiny));
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (const auto& r : report.rows) {
      const double dx = std::log(r.t) - mx;
      sxx += dx * dx;
      sxy += dx * (std::log(std::max(r.rho, tiny)) - my);
    }
    report.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  }
  return report;
}

Lambda1Fit lambda1_estimate(const Domain& domain, const std::vector<double>& t_grid,
                            const SpatialBudget& budget, const RngStream& rng,
                            const ProcessParams& params, const RunOptions& opts) {
  if (t_grid.size() < 2) throw PreconditionError("lambda1 needs at least two times");
  Lambda1Fit fit;
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    TraceEstimate z = z_trace(t_grid[i], domain, budget, rng.substream(i), params, opts);
    if (!(z.value > 0.0)) {
      throw InsufficientBudget("trace estimate at t=" + fmt(t_grid[i]) +
                               " is not positive; increase the budget");
    }
    fit.traces.push_back(std::move(z));
  }
  // Weighted least squares for y = -log Z against t.
  double sw = 0.0;
  double swx = 0.0;
  double swy = 0.0;
  std::int64_t n = 0;
  std::vector<double> ys;
  for (const auto& z : fit.traces) {
    const double rel = std::max(z.std_error / z.value, 1e-12);
    const double w = 1.0 / (rel * rel);
    const double y = -std::log(z.value);
    ys.push_back(y);
    sw += w;
    swx += w * z.t;
    swy += w * y;
    n += z.n_samples;
  }
  const double xbar = swx / sw;
  const double ybar = swy / sw;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < fit.traces.size(); ++i) {
    const auto& z = fit.traces[i];
    const double rel = std::max(z.std_error / z.value, 1e-12);
    const double w = 1.0 / (rel * rel);
    sxx += w * (z.t - xbar) * (z.t - xbar);
    sxy += w * (z.t - xbar) * (ys[i] - ybar);
  }
  fit.lambda1.value = sxy / sxx;
  fit.lambda1.std_error = std::sqrt(1.0 / sxx);
  fit.lambda1.n_samples = n;
  fit.lambda1.t = t_grid.back();
  fit.lambda1.dt = fit.traces.back().dt;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i + 1 < fit.traces.size(); ++i) {
    const double s = (ys[i + 1] - ys[i]) / (fit.traces[i + 1].t - fit.traces[i].t);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  fit.contamination = hi - lo;
  fit.contaminated = fit.contamination > fit.lambda1.std_error;
  label(fit.lambda1, "lambda1_estimate", params, opts);
  fit.lambda1.meta["domain"] = domain.describe();
  fit.lambda1.meta["contamination"] = fmt(fit.contamination);
  fit.lambda1.meta["contaminated"] = fit.contaminated ? "true" : "false";
  return fit;
}

bool ComparisonReport::any_violation() const {
  return std::any_of(rows.begin(), rows.end(), [](const ComparisonRow& r) { return r.violated; });
}

ComparisonReport comparison_check(double t, const std::vector<Point>& x_list, const Domain& domain,
                          std::size_t n_paths, double dt, const RngStream& rng,
                          const ProcessParams& params, double z, const RunOptions& opts) {
  check_options(opts);
  const ProcessParams stable = params.with_mass(0.0);
  const std::size_t steps = fine_steps(t, dt, opts.levels);
  const KernelBank bank_mass(t, steps, opts.levels, params);
  const KernelBank bank_stable(t, steps, opts.levels, stable);
  const PathScorer scorer_mass(bank_mass, params, opts);
  const PathScorer scorer_stable(bank_stable, stable, opts);
  const double e_mt = std::exp(params.m * t);
  const double p_mass = free_density(t, 0.0, params);
  const double p_stable = free_density(t, 0.0, stable);

  ComparisonReport report;
  report.t = t;
  report.z = z;
  for (std::size_t i = 0; i < x_list.size(); ++i) {
    ComparisonRow row;
    row.x = x_list[i];
    row.r_mass = r_estimate_with(scorer_mass, bank_mass, row.x, domain, n_paths,
                                 rng.substream(2 * i), params, opts);
    row.r_stable = r_estimate_with(scorer_stable, bank_stable, row.x, domain, n_paths,
                                   rng.substream(2 * i + 1), stable, opts);
    row.r_bound = e_mt * e_mt * row.r_stable.value;
    const double se_r = std::hypot(row.r_mass.std_error, e_mt * e_mt * row.r_stable.std_error);
    row.r_excess = se_r > 0.0 ? (row.r_mass.value - row.r_bound) / se_r
                              : (row.r_mass.value > row.r_bound ? 1e300 : 0.0);
    row.p_mass = p_mass - row.r_mass.value;
    row.p_bound = e_mt * (p_stable - row.r_stable.value);
    const double se_p = std::hypot(row.r_mass.std_error, e_mt * row.r_stable.std_error);
    row.p_excess = se_p > 0.0 ? (row.p_mass - row.p_bound) / se_p
                              : (row.p_mass > row.p_bound ? 1e300 : 0.0);
    row.violated = row.r_excess > z || row.p_excess > z;
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace relstable
