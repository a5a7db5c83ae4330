#pragma once

// Acceptance suite and the sampler self-tests it is built from. Each check
// writes its evidence as a table under the output directory; the summary
// table lists one row per criterion.

#include <iosfwd>
#include <string>
#include <vector>

#include "relstable/config.hpp"
#include "relstable/report.hpp"
#include "relstable/specfun.hpp"

namespace relstable {

struct CharfnRow {
  double xi = 0.0;
  double target = 0.0;
  double re = 0.0;
  double re_se = 0.0;
  double im = 0.0;
  double im_se = 0.0;
  bool pass = false;
};

/// Empirical characteristic function of n increments at xi e_1 against
/// exp(-dt((m^{2/alpha} + xi^2)^{alpha/2} - m)); pass within z standard errors.
std::vector<CharfnRow> charfn_test(const ProcessParams& params, double dt,
                                   const std::vector<double>& xis, std::size_t n,
                                   const RngStream& rng, int workers, double z);

struct AcceptanceRow {
  std::int64_t draws = 0;
  std::int64_t proposals = 0;
  double rate = 0.0;
  double rate_se = 0.0;
  double target = 0.0;
  /// Mean of the accepted draws and its target dt beta m^{(beta-1)/beta}.
  double mean = 0.0;
  double mean_se = 0.0;
  double mean_target = 0.0;
  bool pass = false;
};

AcceptanceRow acceptance_test(const ProcessParams& params, double dt, std::size_t n,
                              const RngStream& rng, int workers, double z);

struct LaplaceRow {
  double beta = 0.0;
  double lambda = 0.0;
  double target = 0.0;
  double mean = 0.0;
  double se = 0.0;
  bool pass = false;
};

/// E exp(-lambda T_beta(dt)) over n exact draws against exp(-dt lambda^beta).
std::vector<LaplaceRow> laplace_sampler_test(double beta, double dt,
                                             const std::vector<double>& lambdas, std::size_t n,
                                             const RngStream& rng, int workers, double z);

/// int_0^inf e^{-lambda u} theta_beta(1,u) du by adaptive quadrature in log u.
double subordinator_laplace_quadrature(double beta, double lambda,
                                       const SubordinatorDensityOptions& opt = {});

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<CriterionResult> results;
  bool all_passed() const;
};

struct VerifyOptions {
  /// Include criterion 10 (reruns the suite twice at a small budget).
  bool determinism = true;
  /// Budget scale of the two determinism reruns, relative to cfg.budget_scale.
  double determinism_scale = 0.02;
  /// Progress lines (never part of the artifacts); may be null.
  std::ostream* log = nullptr;
};

/// Runs criteria 1-10 with seeds derived from cfg.seed and writes every table
/// plus verify_summary into out_dir.
VerifyReport run_verify(const ExperimentConfig& cfg, const std::string& out_dir,
                        const VerifyOptions& opts = {});

/// Lists regular files under dir (relative paths, sorted).
std::vector<std::string> list_artifacts(const std::string& dir);
/// True when both trees hold the same files with identical bytes; mismatches
/// are appended to `differences`.
bool same_artifacts(const std::string& a, const std::string& b,
                    std::vector<std::string>* differences = nullptr);

}  // namespace relstable
