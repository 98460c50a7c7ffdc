#pragma once

#include "gnlab/ineq.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gnlab {

/// Everything that determines a run. Validated before any computation and
/// embedded verbatim in every report; identical configs give identical reports.
struct RunConfig {
  std::string space;  ///< builtin descriptor, exclusive with `file`
  std::string file;
  std::string suite = "core";
  std::uint64_t seed = 7;
  std::optional<double> q, p, l, alpha, nu, sigma;
  std::optional<double> t_min, t_max;
  std::optional<int> t_points;
  int s_points = 32;
  int r_max = 4;
  Index dense_cap = 4096;
  int corpus_size = 20;
  std::string kinds = "smoothed_noise,ball_indicator,distance_bump,eigenvector,rademacher";
  std::string format = "json";  ///< json, csv or both

  /// Throws std::domain_error describing the first invalid field.
  void validate() const;
  /// Canonical JSON object (fixed key order, unset optionals as null).
  std::string to_json() const;
  static RunConfig from_json(const std::string& text);
};

/// Suites: hypotheses, symmetrization, gn, sobolev, lorentz, nonlinear, kfunc and
/// core (hypotheses + symmetrization + gn).
const std::vector<std::string>& suite_names();

struct SuiteJob {
  std::string name;
  std::function<CheckReport()> run;
};

/// Everything a suite needs, built once per run.
struct RunContext {
  explicit RunContext(const RunConfig& config);

  RunConfig config;
  std::shared_ptr<const Space> space;
  Semigroup semigroup;
  Corpus corpus;
  /// growth_exponent over r in [1, max(2, diameter/4)].
  double fitted_sigma = 0.0;
};

/// Jobs in a fixed order. Throws std::domain_error for an unknown suite or
/// parameters the suite cannot accept.
std::vector<SuiteJob> suite_jobs(const RunContext& context);

/// Runs jobs on up to `jobs` threads; results keep the job order.
std::vector<CheckReport> run_jobs(const std::vector<SuiteJob>& jobs, int jobs_limit);

/// Entry point of the gnlab tool. Exit codes: 0 success, 1 internal error,
/// 2 invalid input.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gnlab
