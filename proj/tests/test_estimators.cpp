#include <doctest.h>

#include <random>

#include "common/oracles.hpp"
#include "pmls/estimators.hpp"
#include "pmls/evaluation.hpp"
#include "pmls/ordered_view.hpp"

using namespace pmls;

namespace {

Dataset make_regression(int n, int p, double noise_sd, unsigned seed,
                        double err_mean = 0.0) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd X(n, p);
  VectorXd Y(n);
  for (int i = 0; i < n; ++i) {
    double fitted = 0.0;
    for (int j = 0; j < p; ++j) {
      X(i, j) = 1.0 + normal(gen);
      fitted += 2.0 * (j + 1) * X(i, j);
    }
    Y(i) = fitted + err_mean + noise_sd * normal(gen);
  }
  return validate_dataset(X, Y);
}

}  // namespace

TEST_CASE("ols_fit recovers a noiseless slope exactly") {
  MatrixXd X(6, 1);
  X << 1, 2, 3, 4, 5, 6;
  VectorXd Y = 2.0 * X.col(0);
  const Dataset ds = validate_dataset(X, Y);
  const OlsFit fit = ols_fit(ds);
  CHECK(fit.beta(0) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(fit.residuals.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("ols_fit center modes reproduce the centered estimators") {
  const Dataset ds = make_regression(2000, 1, 0.3, 21, /*err_mean=*/5.0);
  // y-only centering halves the slope when X ~ N(1,1): beta E[X]^2/E[X^2]
  const OlsFit y_only = ols_fit(ds, CenterMode::kYOnly);
  CHECK(y_only.beta(0) == doctest::Approx(1.0).epsilon(0.15));
  const OlsFit both = ols_fit(ds, CenterMode::kBoth);
  CHECK(both.beta(0) == doctest::Approx(2.0).epsilon(0.05));
  CHECK(both.intercept == doctest::Approx(5.0).epsilon(0.1));
}

TEST_CASE("penalty stats vanish when all residuals are identical") {
  MatrixXd X = MatrixXd::Ones(8, 1);
  VectorXd Y = VectorXd::Constant(8, 0.0);
  const Dataset ds = validate_dataset(X, Y);
  const OlsFit ols = ols_fit(ds);
  VectorXd beta(1);
  beta << 0.25;
  const OrderedView view = order_view(squared_quantities(ds, beta, 0.1));
  const PenaltyStats s = penalty_stats(ds, view, 6, ols.residuals, beta, 0.1);
  CHECK(s.upsilon1 == doctest::Approx(0.0));
  CHECK(s.upsilon2(0.1) == doctest::Approx(0.0));
  CHECK(s.gamma == doctest::Approx(0.0));
  CHECK(s.lambda_stat == doctest::Approx(0.0));
  CHECK(s.delta_hat == doctest::Approx(0.0));
}

TEST_CASE("penalty stats match the two-loop oracle on a 6-point instance") {
  MatrixXd X(6, 1);
  X << 0.5, -1.0, 2.0, 1.5, -0.5, 3.0;
  VectorXd Y(6);
  Y << 2.0, -1.5, 5.5, 2.5, 0.0, 9.0;
  const Dataset ds = validate_dataset(X, Y);
  const OlsFit ols = ols_fit(ds);
  VectorXd beta(1);
  beta << 1.8;
  const double mu = 0.7;

  const VectorXd g = squared_quantities(ds, beta, mu);
  const OrderedView view = order_view(g);
  for (Index n : {4, 5, 6}) {
    const PenaltyStats s = penalty_stats(ds, view, n, ols.residuals, beta, mu);
    const std::vector<double> gv(g.data(), g.data() + g.size());
    const auto ref = oracle::naive_half_stats(ds, gv, n, ols.residuals, beta, mu);
    CHECK(s.upsilon1 == doctest::Approx(ref.upsilon1).epsilon(1e-12));
    CHECK(s.upsilon2(mu) == doctest::Approx(ref.upsilon2).epsilon(1e-12));
    CHECK(s.gamma == doctest::Approx(ref.gamma).epsilon(1e-12));
    CHECK(s.lambda_stat == doctest::Approx(ref.lambda_stat).epsilon(1e-12));
    CHECK(s.delta_hat == doctest::Approx(ref.delta_hat).epsilon(1e-12));
  }
}

TEST_CASE("penalty stats reject degenerate halves") {
  const Dataset ds = make_regression(10, 1, 1.0, 2);
  const OlsFit ols = ols_fit(ds);
  VectorXd beta(1);
  beta << 2.0;
  const OrderedView view = order_view(squared_quantities(ds, beta, 0.0));
  try {
    penalty_stats(ds, view, 3, ols.residuals, beta, 0.0);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNTooSmall);
  }
}

TEST_CASE("upsilon2 affine form equals the direct two-half computation") {
  const Dataset ds = make_regression(40, 2, 1.5, 33);
  const OlsFit ols = ols_fit(ds);
  VectorXd beta(2);
  beta << 2.0, 4.0;
  std::mt19937 gen(12);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  const VectorXd g = squared_quantities(ds, beta, 1.0);
  const OrderedView view = order_view(g);
  const PenaltyStats s = penalty_stats(ds, view, 24, ols.residuals, beta, 1.0);
  const std::vector<double> gv(g.data(), g.data() + g.size());
  for (int k = 0; k < 100; ++k) {
    const double mu = u(gen);
    const auto ref = oracle::naive_half_stats(ds, gv, 24, ols.residuals, beta, mu);
    CHECK(s.upsilon2(mu) ==
          doctest::Approx(ref.upsilon2).epsilon(1e-10).scale(std::abs(ref.upsilon2) + 1));
  }
}

TEST_CASE("subproblem solution beats a 50x50 lattice around it") {
  std::mt19937 gen(44);
  std::normal_distribution<double> normal;
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 12;
    MatrixXd Z(n, 2);
    VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      Z(i, 0) = normal(gen);
      Z(i, 1) = 1.0;
      y(i) = 1.5 * Z(i, 0) + 0.5 + normal(gen);
    }
    const double lambda = 0.4;
    const double a = normal(gen);
    VectorXd l(2);
    l << normal(gen), normal(gen);
    const auto sol = detail::solve_penalized_subproblem(Z, y, lambda, a, l);
    auto objective = [&](const VectorXd& theta) {
      return (y - Z * theta).squaredNorm() / n + lambda * std::abs(a + l.dot(theta));
    };
    CHECK(sol.objective == doctest::Approx(objective(sol.theta)).epsilon(1e-12));
    for (int i = 0; i < 50; ++i) {
      for (int j = 0; j < 50; ++j) {
        VectorXd theta = sol.theta;
        theta(0) += -0.5 + 0.02 * i;
        theta(1) += -0.5 + 0.02 * j;
        CHECK(sol.objective <= objective(theta) + 1e-12);
      }
    }
  }
}

TEST_CASE("first step on a single zero-mean component behaves like trimmed LS") {
  const Dataset ds = make_regression(300, 1, 0.5, 77);
  TuningParams tuning;
  const FitResult fit = pmls_first_step(ds, tuning);
  const double se = std::sqrt(fit.cov_beta_mu(0, 0));
  CHECK(std::abs(fit.beta(0) - 2.0) < 3.0 * std::max(se, 0.02));
  CHECK(std::abs(fit.mu_star) < 0.2);
  CHECK(fit.cov_beta_mu(1, 1) > 0.0);
  // plug-in covariance is symmetric PSD
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(fit.cov_beta_mu);
  CHECK(eig.eigenvalues().minCoeff() > -1e-12);
}

TEST_CASE("first step objective is certified by a brute-force lattice on a toy") {
  std::mt19937 gen(101);
  std::normal_distribution<double> normal;
  MatrixXd X(8, 1);
  VectorXd Y(8);
  for (int i = 0; i < 8; ++i) {
    X(i, 0) = normal(gen);
    Y(i) = 1.2 * X(i, 0) + (i < 4 ? 0.5 : 2.5) + 0.3 * normal(gen);
  }
  const Dataset ds = validate_dataset(X, Y);
  TuningParams tuning;
  const FitResult fit = pmls_first_step(ds, tuning);
  const OlsFit ols = ols_fit(ds);

  const double lam = std::pow(double(fit.n_selected), -0.5);
  const double reported =
      oracle::naive_first_step_objective(ds, ols.residuals, fit.beta, fit.mu_star,
                                         fit.n_selected, lam);
  CHECK(reported == doctest::Approx(fit.diagnostics.at("objective")).epsilon(1e-9));

  double lattice_min = std::numeric_limits<double>::infinity();
  for (Index n = 4; n <= 8; ++n) {
    const double lam_n = std::pow(double(n), -0.5);
    for (int bi = 0; bi < 200; ++bi) {
      const double beta = -3.0 + 8.0 * bi / 199.0;
      for (int mi = 0; mi < 200; ++mi) {
        const double mu = -4.0 + 12.0 * mi / 199.0;
        VectorXd b(1);
        b << beta;
        lattice_min = std::min(
            lattice_min,
            oracle::naive_first_step_objective(ds, ols.residuals, b, mu, n, lam_n));
      }
    }
  }
  CHECK(reported <= lattice_min + 1e-6);
}

TEST_CASE("second step: constant residuals give mu = c at any n") {
  MatrixXd X = MatrixXd::Identity(10, 2);
  VectorXd beta(2);
  beta << 1.0, -1.0;
  VectorXd Y = X * beta;
  Y.array() += 3.25;
  const Dataset ds = validate_dataset(X, Y);
  TuningParams tuning;
  const SecondStepResult r = pmls_second_step(ds, beta, tuning);
  CHECK(r.mu_upper == doctest::Approx(3.25).epsilon(1e-12));
}

TEST_CASE("second step equals the enumeration oracle on a tiny instance") {
  const Dataset ds = make_regression(12, 1, 1.0, 55, 1.0);
  VectorXd beta(1);
  beta << 2.0;
  TuningParams tuning;
  const SecondStepResult r = pmls_second_step(ds, beta, tuning);

  VectorXd h = ds.Y - ds.X * beta;
  double best = std::numeric_limits<double>::infinity();
  for (Index n = 4; n <= 12; ++n) {
    const double lt = std::pow(double(n), -0.5);
    // closed-form mu at this n is the mean of the top-n values
    std::vector<double> vals(h.data(), h.data() + h.size());
    std::sort(vals.begin(), vals.end(), std::greater<>());
    double mu = 0.0;
    for (Index r2 = 0; r2 < n; ++r2) mu += vals[size_t(r2)];
    mu /= double(n);
    best = std::min(best, oracle::naive_second_step_objective(h, mu, n, lt));
    // a lattice around mu must not beat the closed form at the same n
    for (int k = -25; k <= 25; ++k) {
      const double mu_k = mu + 0.04 * k;
      CHECK(oracle::naive_second_step_objective(h, mu, n, lt) <=
            oracle::naive_second_step_objective(h, mu_k, n, lt) + 1e-12);
    }
  }
  CHECK(r.objective == doctest::Approx(best).epsilon(1e-8));
}

TEST_CASE("upper expectation sample: constants, symmetry, signed flag") {
  const VectorXd c = VectorXd::Constant(20, 4.5);
  TuningParams tuning;
  CHECK(upper_expectation_sample(c, tuning).mu_upper == doctest::Approx(4.5));

  std::mt19937 gen(8);
  std::normal_distribution<double> normal;
  VectorXd y(50);
  for (int i = 0; i < 50; ++i) y(i) = normal(gen) + (i % 2 ? 0.0 : 3.0);
  const SampleUpperResult up = upper_expectation_sample(y, tuning);
  const SampleUpperResult lo = lower_expectation_sample(-y, tuning);
  CHECK(lo.mu_upper == doctest::Approx(-up.mu_upper).epsilon(1e-15));
  CHECK(lo.n_selected == up.n_selected);

  // the half-split difference of the value ordering is nonnegative, so the
  // signed and absolute penalties agree
  const SampleUpperResult abs_pen = upper_expectation_sample(y, tuning, false);
  CHECK(abs_pen.mu_upper == doctest::Approx(up.mu_upper));
  CHECK(abs_pen.n_selected == up.n_selected);
}

TEST_CASE("sample estimator is certified by enumeration") {
  std::mt19937 gen(123);
  std::normal_distribution<double> normal;
  VectorXd y(9);
  for (int i = 0; i < 9; ++i) y(i) = normal(gen) + (i < 3 ? 2.0 : 0.0);
  TuningParams tuning;
  const SampleUpperResult r = upper_expectation_sample(y, tuning);
  double best = std::numeric_limits<double>::infinity();
  for (Index n = 4; n <= 9; ++n) {
    const double lam = std::pow(double(n), -0.5);
    std::vector<double> vals(y.data(), y.data() + y.size());
    std::sort(vals.begin(), vals.end(), std::greater<>());
    double mu = 0.0;
    for (Index k = 0; k < n; ++k) mu += vals[size_t(k)];
    mu /= double(n);
    best = std::min(best, oracle::naive_sample_objective(y, mu, n, lam, true));
  }
  CHECK(r.objective == doctest::Approx(best).epsilon(1e-9));
}

TEST_CASE("improved fit with lambda1 = 0 matches the first step bit for bit") {
  const Dataset ds = make_regression(60, 1, 1.0, 31, 2.0);
  TuningParams tuning;
  tuning.lambda1 = 0.0;
  const FitResult base = pmls_first_step(ds, tuning);
  const FitResult imp = pmls_improved(ds, tuning);
  CHECK(imp.beta(0) == base.beta(0));
  CHECK(imp.mu_star == base.mu_star);
  CHECK(imp.n_selected == base.n_selected);
  CHECK(imp.diagnostics.at("objective") == base.diagnostics.at("objective"));
}

TEST_CASE("scaling X by a power of two rescales beta exactly") {
  const Dataset ds = make_regression(40, 2, 1.0, 63, 1.5);
  TuningParams tuning;
  tuning.n_lambda = 20;
  const FitResult base = pmls_first_step(ds, tuning);
  Dataset scaled = ds;
  scaled.X *= 4.0;
  const FitResult s = pmls_first_step(scaled, tuning);
  CHECK(s.beta(0) == base.beta(0) / 4.0);
  CHECK(s.beta(1) == base.beta(1) / 4.0);
  CHECK(s.mu_star == base.mu_star);
  CHECK(s.n_selected == base.n_selected);
  CHECK(s.diagnostics.at("objective") == base.diagnostics.at("objective"));
}

TEST_CASE("second step shifts with Y when beta is held fixed") {
  const Dataset ds = make_regression(50, 1, 1.0, 71, 1.0);
  VectorXd beta(1);
  beta << 2.0;
  TuningParams tuning;
  const SecondStepResult base = pmls_second_step(ds, beta, tuning);
  Dataset shifted = ds;
  shifted.Y.array() += 11.5;
  const SecondStepResult s = pmls_second_step(shifted, beta, tuning);
  CHECK(s.mu_upper == doctest::Approx(base.mu_upper + 11.5).epsilon(1e-10));
  CHECK(s.n_selected == base.n_selected);
}

TEST_CASE("first-step data term is non-increasing in n") {
  const Dataset ds = make_regression(30, 1, 2.0, 91, 1.0);
  VectorXd beta(1);
  beta << 1.7;
  const OrderedView view = order_view(squared_quantities(ds, beta, 0.9));
  double prev = std::numeric_limits<double>::infinity();
  for (Index n = 1; n <= 30; ++n) {
    double mean = 0.0;
    for (Index r = 0; r < n; ++r) mean += view.values(r);
    mean /= double(n);
    CHECK(mean <= prev + 1e-12);
    prev = mean;
  }
}

TEST_CASE("lower expectation mirrors: regression version") {
  const Dataset ds = make_regression(80, 1, 0.4, 19, 3.0);
  VectorXd beta(1);
  beta << 2.0;
  TuningParams tuning;
  const SecondStepResult up = pmls_second_step(ds, beta, tuning);
  Dataset neg = ds;
  neg.Y = -ds.Y;
  const SecondStepResult up_neg = pmls_second_step(neg, -beta, tuning);
  const SecondStepResult lo = lower_expectation_regression(ds, beta, tuning);
  CHECK(lo.mu_upper == doctest::Approx(-up_neg.mu_upper).epsilon(1e-15));
  CHECK(lo.n_selected == up_neg.n_selected);
  CHECK(up.mu_upper >= lo.mu_upper);
}
