#include <doctest.h>

#include <random>

#include "pmls/estimators.hpp"
#include "pmls/evaluation.hpp"

using namespace pmls;

namespace {

FitResult toy_fit() {
  FitResult fit;
  fit.beta.resize(2);
  fit.beta << 1.0, -2.0;
  fit.mu_upper = 7.0;
  fit.mu_lower = 3.0;
  fit.beta_ls.resize(2);
  fit.beta_ls << 1.5, -1.0;
  fit.intercept_ls = 0.25;
  return fit;
}

}  // namespace

TEST_CASE("predict modes: zero row, mid/max identity, missing lower") {
  const FitResult fit = toy_fit();
  MatrixXd X0 = MatrixXd::Zero(1, 2);
  CHECK(predict(fit, X0, PredictionMode::kMax)(0) == 7.0);
  CHECK(predict(fit, X0, PredictionMode::kMid)(0) == 5.0);
  CHECK(predict(fit, X0, PredictionMode::kLs)(0) == 0.25);

  MatrixXd X1 = MatrixXd::Random(6, 2);
  const VectorXd max_pred = predict(fit, X1, PredictionMode::kMax);
  const VectorXd mid_pred = predict(fit, X1, PredictionMode::kMid);
  const double gap = (*fit.mu_upper - *fit.mu_lower) / 2.0;
  for (Index i = 0; i < 6; ++i)
    CHECK(max_pred(i) == doctest::Approx(mid_pred(i) + gap).epsilon(1e-15));

  FitResult no_lower = fit;
  no_lower.mu_lower.reset();
  try {
    predict(no_lower, X0, PredictionMode::kMid);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMissingLowerExpectation);
  }
}

TEST_CASE("ls predictions are invariant under training-row shuffles") {
  std::mt19937 gen(4);
  std::normal_distribution<double> normal;
  MatrixXd X(40, 2);
  VectorXd Y(40);
  for (int i = 0; i < 40; ++i) {
    X(i, 0) = normal(gen);
    X(i, 1) = normal(gen);
    Y(i) = 2.0 * X(i, 0) - X(i, 1) + 0.1 * normal(gen);
  }
  const Dataset ds = validate_dataset(X, Y);
  std::vector<Index> perm(40);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), gen);
  const Dataset shuffled = ds.rows(perm);

  const OlsFit a = ols_fit(ds);
  const OlsFit b = ols_fit(shuffled);
  CHECK((a.beta - b.beta).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("ape: perfect fit, full-length identity, hand instance") {
  VectorXd y(5), yhat(5);
  y << 10, 8, 6, 4, 2;
  yhat << 9, 8, 7, 4, 0;
  CHECK(ape_top_m(y, y, 3) == 0.0);
  // full length equals the unsorted mean squared prediction error
  const double mse = (y - yhat).squaredNorm() / 5.0;
  CHECK(ape_top_m(y, yhat, 5) == doctest::Approx(mse).epsilon(1e-15));
  // top 2 by observed y: points (10,9) and (8,8)
  CHECK(ape_top_m(y, yhat, 2) == doctest::Approx((1.0 + 0.0) / 2.0));
  // top 3 adds (6,7)
  CHECK(ape_top_m(y, yhat, 3) == doctest::Approx((1.0 + 0.0 + 1.0) / 3.0));
  try {
    ape_top_m(y, yhat, 6);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMTooLarge);
  }
}

TEST_CASE("ape pairing flag sorts predictions independently") {
  VectorXd y(4), yhat(4);
  y << 4, 3, 2, 1;
  yhat << 1, 2, 3, 4;  // reversed
  CHECK(ape_top_m(y, yhat, 2) == doctest::Approx(((4 - 1) * (4 - 1) + 1.0) / 2.0));
  CHECK(ape_top_m(y, yhat, 2, true) == doctest::Approx(0.0));
}

TEST_CASE("r2: perfect fit, centered fit, zero denominator") {
  VectorXd y(6), ybar(6);
  y << 9, 7, 5, 3, 1, -1;
  CHECK(r2_top_m(y, y, 4) == doctest::Approx(1.0));
  const double top3_mean = (9 + 7 + 5) / 3.0;
  ybar = VectorXd::Constant(6, top3_mean);
  CHECK(r2_top_m(y, ybar, 3) == doctest::Approx(0.0));
  CHECK(r2_top_m(y, ybar, 5) <= 1.0);

  VectorXd flat = VectorXd::Constant(6, 2.0);
  try {
    r2_top_m(flat, y, 3);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kZeroDenominator);
  }
}

TEST_CASE("histogram: bins partition the range and count everything") {
  VectorXd v(7);
  v << 0, 1, 2, 3, 4, 5, 10;
  const auto bins = histogram(v, 5);
  CHECK(bins.size() == 5);
  Index total = 0;
  for (const auto& b : bins) total += b.count;
  CHECK(total == 7);
  CHECK(bins.front().left == 0.0);
  CHECK(bins.back().right == 10.0);
  CHECK(bins.back().count == 1);  // right-closed last bin holds the max

  const auto single = histogram(VectorXd::Constant(4, 2.5), 3);
  Index nonzero = 0;
  for (const auto& b : single)
    if (b.count > 0) ++nonzero;
  CHECK(nonzero == 1);
}

TEST_CASE("histogram of a large uniform sample is nearly flat") {
  std::mt19937 gen(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  VectorXd v(100000);
  for (int i = 0; i < 100000; ++i) v(i) = u(gen);
  const auto bins = histogram(v, 10);
  Index lo = bins[0].count, hi = bins[0].count;
  for (const auto& b : bins) {
    lo = std::min(lo, b.count);
    hi = std::max(hi, b.count);
  }
  CHECK(double(hi) / double(lo) < 2.0);
}
