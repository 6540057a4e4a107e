#pragma once

#include <cstdint>
#include <vector>

#include "pmls/types.hpp"

namespace pmls {

// Cross-validation grid over theta = (lambda, n).
struct CvGrid {
  std::vector<double> lambda_grid;  // nonnegative, sorted ascending
  std::vector<Index> n_grid;        // sorted ascending
  int folds = 5;
  uint64_t seed = 0;

  void validate() const;

  // lambda in {0} union {N^(eps-1): eps in 0.3, 0.5, 0.7};
  // n/N in {0.1, 0.2, ..., 1.0} clamped to [max(4, p+2), N].
  static CvGrid defaults(Index n_rows, Index n_cols, uint64_t seed);
};

// fold id per row: seeded shuffle, then near-equal contiguous chunks.
std::vector<int> make_folds(Index n_rows, int folds, uint64_t seed);

// One evaluated grid point of a cross-validation surface.
struct CvEntry {
  double lambda = 0;
  Index n = 0;
  double value = 0;      // held-out average plus the complexity term
  double holdout = 0;    // held-out average alone
};

// Five-fold-style selection of (lambda, n_lambda) for the first step.
// CV(theta) = (sum_f held-out top-n G sums)/(sum_f n_f) + (p+2) log(n)/n,
// with fold-scaled truncation n_f = max(1, round(n |fold|/N)). Ties break to
// the smallest lambda, then the smallest n.
TuningParams cv_select_theta(const Dataset& ds, const CvGrid& grid,
                             std::vector<CvEntry>* table = nullptr);

// Selection of (lambda_tilde, n_lambda_tilde) for the second step: held-out
// H values ordered descending, truncated at the fold-scaled n, loss
// sum (H_(j) - mu_hat)^2; complexity term 2 log(n)/n.
TuningParams cv_select_theta_tilde(const Dataset& ds, const VectorXd& beta,
                                   const CvGrid& grid,
                                   std::vector<CvEntry>* table = nullptr);

// beta = 0 case: same criterion with Y in place of H.
TuningParams cv_select_theta_sample(const VectorXd& y, const CvGrid& grid,
                                    std::vector<CvEntry>* table = nullptr);

// Improved (double-penalty) variant of cv_select_theta; lambda1 is tied to
// lambda at every grid point.
TuningParams cv_select_theta_improved(const Dataset& ds, const CvGrid& grid,
                                      std::vector<CvEntry>* table = nullptr);

}  // namespace pmls
