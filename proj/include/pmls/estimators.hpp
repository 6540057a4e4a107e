#pragma once

#include <optional>

#include "pmls/ordered_view.hpp"
#include "pmls/types.hpp"

namespace pmls {

enum class CenterMode { kNone, kYOnly, kBoth };

struct OlsFit {
  VectorXd beta;
  VectorXd residuals;      // of the centered regression actually solved
  double intercept = 0.0;  // implied intercept: 0 / Ybar / Ybar - Xbar'beta
};

// No-intercept least squares via Householder QR. Centering modes subtract the
// column means before solving.
OlsFit ols_fit(const Dataset& ds, CenterMode center = CenterMode::kNone);

// Half-split statistics over the top-n rows of `view`. Sums run over original
// indices; Upsilon2 is kept in the affine form a - 2 b mu (the mu^2 terms
// cancel between the halves).
struct PenaltyStats {
  double upsilon1 = 0;     // half-diff of squared OLS residuals
  double upsilon2_a = 0;   // Upsilon2(Y, mu) = upsilon2_a - 2 upsilon2_b mu
  double upsilon2_b = 0;
  double gamma = 0;        // half-diff of Y - beta'X
  double lambda_stat = 0;  // half-diff of OLS residuals (first power)
  double delta_hat = 0;    // Upsilon2(Y,mu) - 2 xbar'beta upsilon1
  VectorXd x_bar;          // mean of X over the top-n rows

  double upsilon2(double mu) const { return upsilon2_a - 2.0 * upsilon2_b * mu; }
};

PenaltyStats penalty_stats(const Dataset& ds, const OrderedView& view, Index n,
                           const VectorXd& ols_residuals, const VectorXd& beta,
                           double mu);

// Penalized objective of the first-step estimator evaluated at (beta, mu, n):
// the ranking, split and penalty are all recomputed at the given parameters.
// lambda1 adds the first-moment penalty on the OLS-residual ordering.
double first_step_objective(const Dataset& ds, const VectorXd& ols_residuals,
                            const VectorXd& beta, double mu, Index n,
                            double lambda, double lambda1 = 0.0);

// First-step estimator: minimize (1/n) sum of the n largest squared
// residuals plus lambda |Delta_hat_n| over (beta, mu, n). n comes from
// tuning.n_lambda when set, else from an explicit grid; lambda defaults to
// n^(epsilon-1) per candidate n when unset.
FitResult pmls_first_step(const Dataset& ds, const TuningParams& tuning);

// Variant with the additional penalty lambda1 |Lambda_n| on the descending
// ordering of the OLS residuals; lambda1 defaults like lambda when unset.
FitResult pmls_improved(const Dataset& ds, const TuningParams& tuning);

struct SecondStepResult {
  double mu_upper = 0;
  Index n_selected = 0;
  double var_mu_upper = 0;  // Theorem-3.2-style plug-in
  double objective = 0;
  double sigma_tilde_sq = 0;  // sample variance of the selected residuals
};

// Second-step estimator of the upper expectation: order H_j = Y_j - beta'X_j
// descending and minimize (1/n) sum (H_(j) - mu)^2 + lambda_tilde |Gamma_n|
// over (mu, n). sigma_star_sq (first-step residual variance) feeds the
// variance plug-in; when absent, sigma_tilde_sq is substituted.
SecondStepResult pmls_second_step(const Dataset& ds, const VectorXd& beta,
                                  const TuningParams& tuning,
                                  std::optional<double> sigma_star_sq = {});

// Same machinery applied to H^I = Y - beta_I'X from the improved first step.
SecondStepResult pmls_second_step_improved(const Dataset& ds,
                                           const VectorXd& beta_improved,
                                           const TuningParams& tuning,
                                           std::optional<double> sigma_star_sq = {});

struct SampleUpperResult {
  double mu_upper = 0;
  Index n_selected = 0;
  double objective = 0;
};

// beta = 0 special case, Y = eps: minimize (1/n) sum (Y_(j) - mu)^2 plus the
// signed penalty +lambda Delta_n(Y) as displayed; signed_penalty=false uses
// |Delta_n(Y)| instead.
SampleUpperResult upper_expectation_sample(const VectorXd& y,
                                           const TuningParams& tuning,
                                           bool signed_penalty = true);

// Mirrors with ascending order statistics: run the upper procedure on the
// negated values and negate the result.
SampleUpperResult lower_expectation_sample(const VectorXd& y,
                                           const TuningParams& tuning,
                                           bool signed_penalty = true);
SecondStepResult lower_expectation_regression(const Dataset& ds,
                                              const VectorXd& beta,
                                              const TuningParams& tuning,
                                              std::optional<double> sigma_star_sq = {});

// Candidate n values: every integer in [max(4, p+2, 0.05N), N] when N <= 500,
// else the same range with stride ceil(N/200).
std::vector<Index> default_n_grid(Index n_rows, Index n_cols);

namespace detail {

struct SubproblemResult {
  VectorXd theta;  // (beta; mu)
  double objective = 0;
  int branch = 0;  // +1 / -1 sign branch, 0 kink, 2 penalty-free
  // every closed-form candidate considered (sign branches, kink, LS); the
  // outer loop re-scores them on the re-ranked objective
  std::vector<VectorXd> candidates;
};

// Exact minimizer of (1/n)|y - Z theta|^2 + lambda |a + l'theta|: both sign
// branches in closed form, kink (equality-constrained) solve when neither is
// sign-consistent.
SubproblemResult solve_penalized_subproblem(const MatrixXd& Z, const VectorXd& y,
                                            double lambda, double a,
                                            const VectorXd& l);

}  // namespace detail

}  // namespace pmls
