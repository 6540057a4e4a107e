#pragma once

#include <map>
#include <string>
#include <vector>

#include "pmls/stats.hpp"
#include "pmls/types.hpp"

namespace pmls {

enum class PredictionMode { kLs, kMax, kMid };

PredictionMode prediction_mode_from(const std::string& name);
const char* to_string(PredictionMode mode);

// ls  -> beta_ls'x + intercept_ls
// max -> beta'x + mu_upper
// mid -> beta'x + (mu_lower + mu_upper)/2
VectorXd predict(const FitResult& fit, const MatrixXd& X0, PredictionMode mode);

// Pairing for the top-m prediction metrics: sort test pairs by observed y
// descending (stable), keep predictions attached to their test points.
// independent_pairing=true instead sorts predictions on their own.
double ape_top_m(const VectorXd& y_test, const VectorXd& y_hat, Index m,
                 bool independent_pairing = false);
double r2_top_m(const VectorXd& y_test, const VectorXd& y_hat, Index m,
                bool independent_pairing = false);

struct HistogramBin {
  double left = 0, right = 0;
  Index count = 0;
};

// Equal-width bins over [min, max]; the last bin is right-closed.
std::vector<HistogramBin> histogram(const VectorXd& values, Index bins);

Index count_local_maxima(const std::vector<HistogramBin>& bins);

struct ParamSummary {
  double truth = 0;
  double bias = 0;
  double mse = 0;
  FiveNumber summary;
  Index count = 0;
};

struct PredictionSummary {
  std::vector<double> ape_curve;  // medians across reps, m = 1..n_test
  double ape_all = 0;             // median across reps of APE at m = n_test
  std::vector<double> r2_curve;   // medians across reps, m = 2..n_test
};

// Bias/MSE/APE/R2 aggregates over replications.
struct MetricReport {
  std::map<std::string, ParamSummary> per_parameter;
  std::map<std::string, PredictionSummary> predictions;  // "ls"/"max"/"mid"
  Index reps = 0;
  Index failures = 0;
  std::vector<std::string> failure_messages;
  std::string rng_name;
  uint64_t seed = 0;
  // Fraction of reps in which the max-mode prediction beats the ls mode on
  // the largest observations, measured by APE at m = 0.3 n_test.
  double max_below_ls_fraction = 0.0;
};

}  // namespace pmls
