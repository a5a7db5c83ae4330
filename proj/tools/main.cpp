#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "relstable/config.hpp"
#include "relstable/errors.hpp"
#include "relstable/kernels.hpp"
#include "relstable/report.hpp"
#include "relstable/tracelab.hpp"
#include "relstable/verify.hpp"

namespace fs = std::filesystem;
using namespace relstable;

namespace {

// Stream ids per subcommand so that runs of different subcommands with one
// seed never share random numbers.
enum Stream : std::uint64_t {
  kSubordinator = 101,
  kCharfn = 102,
  kHalfspace = 103,
  kTrace = 104,
  kResidual = 105,
  kLambda1 = 106,
};

struct Output {
  const ExperimentConfig& cfg;

  void emit(const Table& t) const {
    const Format f = parse_format(cfg.format);
    const auto meta = cfg.entries();
    if (cfg.out.empty()) {
      write_table(std::cout, t, f, meta);
      std::cout << "\n";
    } else {
      const std::string path = (fs::path(cfg.out) / (t.name + extension(f))).string();
      write_table_file(path, t, f, meta);
      std::cerr << "wrote " << path << "\n";
    }
  }
};

std::string g6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::optional<double> cached_c4(const ExperimentConfig& cfg) {
  if (cfg.out.empty()) return std::nullopt;
  std::ifstream in(fs::path(cfg.out) / "c4.txt");
  double v = 0.0;
  if (in >> v) return v;
  return std::nullopt;
}

int cmd_constants(const ExperimentConfig& cfg) {
  const ProcessParams p = cfg.params();
  std::cout << "params " << p.describe() << "\n";
  std::cout << "C1 = " << g6(c1_const(p)) << "\n";
  if (auto c4 = cached_c4(cfg)) std::cout << "C4 = " << g6(*c4) << " (cached)\n";
  Table t("constants", {"t", "c1_of_t", "c1", "p_t_0"});
  for (double s : cfg.t_grid) t.add({s, c1_of_t(s, p), c1_const(p), free_density(s, 0.0, p)});
  Output{cfg}.emit(t);
  return 0;
}

int cmd_density(const ExperimentConfig& cfg) {
  const ProcessParams p = cfg.params();
  std::vector<double> rs = cfg.r_grid;
  if (rs.empty()) rs = {0.0, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0};
  Table t("density", {"t", "r", "density", "abs_error", "upper_bound"});
  for (double s : cfg.t_grid) {
    for (double r : rs) {
      const DensityValue v = evaluate_free_density(s, r, p);
      t.add({s, r, v.value, v.abs_error, density_upper_bound(s, p)});
    }
  }
  Output{cfg}.emit(t);
  return 0;
}

int cmd_subordinator(const ExperimentConfig& cfg) {
  const ProcessParams p = cfg.params();
  const double dt = cfg.dt > 0 ? cfg.dt : 0.1;
  const RngStream rng(cfg.seed, kSubordinator);
  Table lt("subordinator_laplace", {"beta", "dt", "lambda", "mean", "std_error", "target", "pass"});
  bool ok = true;
  for (const auto& row : laplace_sampler_test(p.beta, dt, {0.1, 1.0, 10.0}, cfg.n_paths,
                                              rng.substream(0), cfg.workers, cfg.z)) {
    lt.add({row.beta, dt, row.lambda, row.mean, row.se, row.target, row.pass});
    ok = ok && row.pass;
  }
  const AcceptanceRow a = acceptance_test(p, dt, cfg.n_paths, rng.substream(1), cfg.workers, cfg.z);
  Table at("subordinator_acceptance", {"alpha", "m", "dt", "draws", "proposals", "rate", "rate_se",
                                       "target", "mean", "mean_se", "mean_target", "pass"});
  at.add({p.alpha, p.m, dt, a.draws, a.proposals, a.rate, a.rate_se, a.target, a.mean, a.mean_se,
          a.mean_target, a.pass});
  Output{cfg}.emit(lt);
  Output{cfg}.emit(at);
  return 0;
}

int cmd_charfn(const ExperimentConfig& cfg) {
  const ProcessParams p = cfg.params();
  const double dt = cfg.dt > 0 ? cfg.dt : 0.1;
  std::vector<double> xis = cfg.r_grid;
  if (xis.empty()) xis = {0.5, 1.0, 2.0};
  Table t("charfn", {"xi", "dt", "target", "re", "re_se", "im", "im_se", "pass"});
  for (const auto& row : charfn_test(p, dt, xis, cfg.n_paths, RngStream(cfg.seed, kCharfn),
                                     cfg.workers, cfg.z)) {
    t.add({row.xi, dt, row.target, row.re, row.re_se, row.im, row.im_se, row.pass});
  }
  Output{cfg}.emit(t);
  return 0;
}

int cmd_halfspace(const ExperimentConfig& cfg) {
  const ProcessParams p = cfg.params();
  const RngStream rng(cfg.seed, kHalfspace);
  Table prof("halfspace_profile", {"t", "q", "f", "std_error", "raw", "bias"});
  Table c2t("halfspace_c2", {"t", "c2", "std_error", "c2_scaled", "tail", "tail_slope"});
  for (std::size_t i = 0; i < cfg.t_grid.size(); ++i) {
    const double t = cfg.t_grid[i];
    const auto qs = cfg.r_grid.empty() ? halfspace_q_grid(t, p, 0.0, cfg.profile_per_decade)
                                       : cfg.r_grid;
    const HalfspaceProfile hp = halfspace_profile(t, qs, cfg.profile_paths, cfg.dt_for(t),
                                                  rng.substream(i), p, cfg.run_options());
    for (std::size_t k = 0; k < qs.size(); ++k) {
      const auto& f = hp.f_values[k];
      prof.add({t, qs[k], f.value, f.std_error, f.raw_value, f.bias});
    }
    if (cfg.r_grid.empty()) {
      const TraceEstimate c2 = integrate_profile(hp, p);
      const double scaled = std::pow(t, (p.d - 1) / p.alpha);
      c2t.add({t, c2.value, c2.std_error, scaled * c2.value, c2.meta.at("tail"),
               c2.meta.at("tail_slope")});
      if (t == 1.0 && p.m == 0.0 && !cfg.out.empty()) {
        fs::create_directories(cfg.out);
        std::ofstream(fs::path(cfg.out) / "c4.txt") << g6(c2.value) << "\n";
      }
    }
  }
  Output{cfg}.emit(prof);
  if (!c2t.rows.empty()) Output{cfg}.emit(c2t);
  return 0;
}

SpatialBudget spatial(const ExperimentConfig& cfg) {
  SpatialBudget b;
  b.n_x = cfg.n_x;
  b.n_paths = 1;
  b.dt = cfg.dt;
  return b;
}

int cmd_trace(const ExperimentConfig& cfg) {
  const ProcessParams p = cfg.params();
  const Domain dom = cfg.make_domain();
  const RngStream rng(cfg.seed, kTrace);
  std::vector<TraceEstimate> zs;
  for (std::size_t i = 0; i < cfg.t_grid.size(); ++i) {
    zs.push_back(z_trace(cfg.t_grid[i], dom, spatial(cfg), rng.substream(i), p,
                         cfg.run_options()));
  }
  Output{cfg}.emit(estimate_table("trace", zs));
  return 0;
}

int cmd_residual(const ExperimentConfig& cfg) {
  const ProcessParams p = cfg.params();
  ResidualBudget b;
  b.spatial = spatial(cfg);
  b.profile_paths = cfg.profile_paths;
  b.profile_per_decade = cfg.profile_per_decade;
  const ResidualReport rep = residual_scan(cfg.t_grid, cfg.make_domain(), b,
                                           RngStream(cfg.seed, kResidual), p, cfg.run_options());
  Table t("residual", {"t", "z_trace", "z_trace_se", "first_term", "c2", "c2_se", "second_term",
                       "c2_scaled", "residual", "residual_se", "rho", "rho_se"});
  for (const auto& r : rep.rows) {
    t.add({r.t, r.z.value, r.z.std_error, r.first_term, r.c2.value, r.c2.std_error,
           r.second_term, r.c2_scaled, r.residual, r.residual_se, r.rho, r.rho_se});
  }
  Table fit("residual_fit", {"c3", "slope"});
  fit.add({rep.c3, rep.slope});
  Output{cfg}.emit(t);
  Output{cfg}.emit(fit);
  return 0;
}

int cmd_lambda1(const ExperimentConfig& cfg) {
  const Lambda1Fit fit = lambda1_estimate(cfg.make_domain(), cfg.t_grid, spatial(cfg),
                                          RngStream(cfg.seed, kLambda1), cfg.params(),
                                          cfg.run_options());
  Output{cfg}.emit(estimate_table("lambda1_traces", fit.traces));
  Table t("lambda1", {"lambda1", "std_error", "contamination", "contaminated"});
  t.add({fit.lambda1.value, fit.lambda1.std_error, fit.contamination, fit.contaminated});
  Output{cfg}.emit(t);
  return 0;
}

int cmd_verify(ExperimentConfig cfg) {
  if (cfg.out.empty()) cfg.out = "verify_out";
  VerifyOptions opts;
  opts.log = &std::cerr;
  const VerifyReport rep = run_verify(cfg, cfg.out, opts);
  // Machine-readable result list on stdout.
  std::cout << "criterion,name,passed,detail\n";
  for (const auto& r : rep.results) {
    std::cout << r.id << "," << csv_field(r.name) << "," << (r.passed ? "true" : "false") << ","
              << csv_field(r.detail) << "\n";
  }
  return rep.all_passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relstable: relativistic stable process heat-trace laboratory"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
  std::optional<std::string> format;
  app.add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "base seed");
  app.add_option("--workers", workers, "worker threads");
  app.add_option("--out", out, "output directory (stdout when omitted)");
  app.add_option("--format", format, "csv or json");

  using Handler = int (*)(ExperimentConfig);
  const std::vector<std::tuple<std::string, std::string, Handler>> commands{
      {"constants", "print C1, C1(t) and a cached C4",
       [](ExperimentConfig c) { return cmd_constants(c); }},
      {"density", "free transition density p(t,r)",
       [](ExperimentConfig c) { return cmd_density(c); }},
      {"subordinator", "sampler self-tests", [](ExperimentConfig c) { return cmd_subordinator(c); }},
      {"charfn", "characteristic function of increments",
       [](ExperimentConfig c) { return cmd_charfn(c); }},
      {"halfspace", "half-space profile and C2(t)",
       [](ExperimentConfig c) { return cmd_halfspace(c); }},
      {"trace", "Z_D(t) over t_grid", [](ExperimentConfig c) { return cmd_trace(c); }},
      {"residual", "two-term residual report", [](ExperimentConfig c) { return cmd_residual(c); }},
      {"lambda1", "principal eigenvalue from the trace decay",
       [](ExperimentConfig c) { return cmd_lambda1(c); }},
      {"verify", "acceptance suite", [](ExperimentConfig c) { return cmd_verify(c); }},
  };
  std::vector<std::string> overrides;
  std::vector<std::pair<CLI::App*, Handler>> subs;
  for (const auto& [name, help, handler] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("overrides", overrides, "config overrides key=value");
    subs.emplace_back(sub, handler);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  ExperimentConfig cfg;
  Handler handler = nullptr;
  try {
    if (!config_path.empty()) cfg = load_config(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw InvalidParameter("override '" + kv + "' is not key=value");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) cfg.seed = *seed;
    if (workers) cfg.workers = *workers;
    if (out) cfg.out = *out;
    if (format) cfg.format = *format;
    cfg.validate();
    for (const auto& [sub, h] : subs) {
      if (sub->parsed()) handler = h;
    }
  } catch (const Error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    return handler(cfg);
  } catch (const InvalidParameter& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const PreconditionError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
