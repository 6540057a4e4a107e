#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pmls/errors.hpp"

namespace pmls {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Covariate matrix and response vector; the only input to estimation.
// X carries no intercept column: the model's intercept is absorbed into the
// upper expectation of the error.
struct Dataset {
  MatrixXd X;  // N x p
  VectorXd Y;  // N
  // Latent-factor tag per row, filled by the simulation generators only.
  // Estimators never read it.
  std::vector<int> labels;

  Index n_rows() const { return Y.size(); }
  Index n_cols() const { return X.cols(); }

  Dataset rows(const std::vector<Index>& idx) const;
};

// Checks dimensions, finiteness, N >= p+2 and column rank of X
// (smallest/largest singular value >= 1e-10).
Dataset validate_dataset(MatrixXd X, VectorXd Y, std::vector<int> labels = {});

// G_i = (Y_i - beta'X_i - mu)^2 for all rows.
VectorXd squared_quantities(const Dataset& ds, const VectorXd& beta, double mu);

enum class ErrorFamily { kNormal };

// A finite family of error distributions with latent-factor weights.
struct ScenarioComponent {
  double mean = 0.0;
  double variance = 1.0;
  ErrorFamily family = ErrorFamily::kNormal;
};

struct UncertainScenario {
  std::vector<ScenarioComponent> components;  // listed with means ascending
  std::vector<double> weights;                // positive, sum to 1

  double upper_expectation() const;  // max component mean
  double lower_expectation() const;  // min component mean
  // Index/mean/centered second moment of the component maximizing
  // E[(eps - upper)^2]; first index on ties.
  Index star_index() const;
  double mu_star() const { return components[star_index()].mean; }
  double sigma_star_sq() const;

  void validate() const;

  static UncertainScenario uniform(std::vector<ScenarioComponent> comps);
};

// (lambda, n_lambda), (lambdaTilde, n_lambdaTilde), lambda1 and the exponent
// epsilon used when a lambda is auto-set as n^(epsilon-1).
struct TuningParams {
  std::optional<double> lambda;        // first-step penalty weight
  std::optional<Index> n_lambda;       // fixed n; grid search when unset
  std::optional<double> lambda_tilde;  // second-step penalty weight
  std::optional<Index> n_lambda_tilde;
  std::optional<double> lambda1;  // extra first-moment penalty (improved fit)
  double epsilon = 0.5;           // in (0,1)

  void validate() const;
};

struct FitResult {
  VectorXd beta;              // PMLS estimate, length p
  double mu_star = 0.0;       // first-step intercept estimate (targets mu_*)
  std::optional<double> mu_upper;  // second-step estimate of the upper expectation
  std::optional<double> mu_lower;
  Index n_selected = 0;
  Index n_selected_second = 0;
  // Residuals of the fitted upper-expectation model: Y - X beta - mu, where
  // mu is mu_upper when present, else mu_star.
  VectorXd residuals;
  MatrixXd cov_beta_mu;  // (p+1)x(p+1) plug-in covariance
  std::optional<double> var_mu_upper;
  std::map<std::string, double> diagnostics;

  // Baseline least-squares fit used by predict(mode=ls); filled by pipelines.
  VectorXd beta_ls;
  double intercept_ls = 0.0;
};

}  // namespace pmls
