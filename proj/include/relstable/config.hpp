#pragma once

// Experiment configuration: a flat key=value text file ('#' starts a
// comment) plus command-line overrides. Every artifact embeds entries() so
// a run can be repeated from its own output.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "relstable/geometry.hpp"
#include "relstable/params.hpp"
#include "relstable/tracelab.hpp"

namespace relstable {

struct ExperimentConfig {
  double alpha = 1.0;
  double m = 0.0;
  int d = 2;
  std::string domain = "ball:R0=1";
  std::vector<double> t_grid{0.02, 0.04, 0.08, 0.16};
  /// Radii for `density`, distances for `halfspace`; empty picks defaults.
  std::vector<double> r_grid;
  std::size_t n_paths = 20000;
  std::size_t n_x = 20000;
  /// Path step; 0 means t/256 for each horizon t.
  double dt = 0.0;
  int levels = 3;
  double richardson_order = 0.0;
  std::size_t profile_paths = 10000;
  int profile_per_decade = 6;
  std::uint64_t seed = 20240611;
  int workers = 1;
  std::string out;
  std::string format = "csv";
  double z = 3.0;
  /// Multiplies every Monte Carlo budget of `verify`.
  double budget_scale = 1.0;
  double subordinator_rel_tol = 1e-11;

  ProcessParams params() const { return ProcessParams::make(alpha, m, d); }
  Domain make_domain() const { return parse_domain(domain, d); }
  RunOptions run_options() const;
  double dt_for(double t) const { return dt > 0.0 ? dt : t / 256.0; }

  /// Canonical (key, value) list in a fixed order.
  std::vector<std::pair<std::string, std::string>> entries() const;

  /// Sets one key from text; throws InvalidParameter for unknown keys or
  /// malformed values.
  void set(const std::string& key, const std::string& value);

  /// Throws InvalidParameter when the combination is unusable.
  void validate() const;
};

ExperimentConfig load_config(const std::string& path);
void apply_config_text(ExperimentConfig& cfg, const std::string& text);
std::string config_text(const ExperimentConfig& cfg);

}  // namespace relstable
