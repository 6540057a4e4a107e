#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pmls/estimators.hpp"
#include "pmls/evaluation.hpp"
#include "pmls/rng.hpp"
#include "pmls/tuning.hpp"
#include "pmls/types.hpp"

namespace pmls {

enum class ExperimentId { kE1a, kE1b, kE2, kE3, kE4, kCustom };

ExperimentId experiment_from(const std::string& name);
const char* to_string(ExperimentId id);

struct CovariateSpec {
  double mean = 0.0;
  double variance = 1.0;
};

struct ExperimentConfig {
  ExperimentId experiment = ExperimentId::kCustom;
  Index n = 500;
  Index reps = 1;
  uint64_t seed = 0;
  UncertainScenario scenario;
  VectorXd beta_true;                       // length p (empty for beta = 0)
  std::vector<CovariateSpec> x_distribution;  // one per covariate
  Index test_size = 0;     // fresh test rows per rep (prediction experiments)
  CenterMode ols_center = CenterMode::kNone;  // baseline centering
  bool sample_penalty_signed = true;  // signed vs |.| penalty, beta = 0 case
  // Tuning overrides; CV grids are derived from the dataset when empty.
  TuningParams tuning;
  std::vector<double> lambda_grid;  // optional CV grid override
  std::vector<Index> n_grid;
  int cv_folds = 5;

  static ExperimentConfig builtin(ExperimentId id, Index n, Index reps,
                                  uint64_t seed);
};

// Draws X per covariate spec, assigns exactly floor(N/L) rows per component
// (remainder to the last components), shuffles, draws eps from the assigned
// component and sets Y = X beta + eps. labels carry the latent tag.
Dataset generate(const ExperimentConfig& config, uint64_t rep);

enum class Pipeline { kOlsOnly, kPmlsFull, kImproved, kBetaZero };

Pipeline pipeline_from(const std::string& name);
const char* to_string(Pipeline p);

// One full estimation pass (CV tuning included) on a dataset; used by the
// replication runner and by the CLI fit command. The seeded variant derives
// the CV fold seed from (config.seed, rep).
FitResult fit_pipeline(const Dataset& ds, Pipeline pipeline,
                       const ExperimentConfig& config);
FitResult fit_pipeline_seeded(const Dataset& ds, Pipeline pipeline,
                              const ExperimentConfig& config, uint64_t rep);

// Runs config.reps independent replications on substream rep and aggregates
// bias, MSE and boxplot summaries; failures are recorded, not dropped.
MetricReport run_replications(const ExperimentConfig& config, Pipeline pipeline);

struct OrderDiagnostic {
  double p = 0;                 // P(Z* <= max Z)
  double tail_bound = 0;        // exact binomial tail from m to n
  double asymptotic_bound = 0;  // Stirling envelope of the same sum
  double monte_carlo = 0;       // P(at least m of the Z* below max Z)
  double mc_std_error = 0;
  Index trials = 0;
};

// Order-statistic separation diagnostic for the U(-1,3)/U(0,4) pair:
// p = 3/4 - 1/(n+1) + 1/((n+1) 4^(n+1)), exact tail computed in log space,
// Monte-Carlo estimate over `trials` draws.
OrderDiagnostic order_statistic_diagnostic(Index n, Index m,
                                           Index trials = 100000,
                                           uint64_t seed = 0);

}  // namespace pmls
