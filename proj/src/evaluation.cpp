#include "pmls/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pmls {

PredictionMode prediction_mode_from(const std::string& name) {
  if (name == "ls") return PredictionMode::kLs;
  if (name == "max") return PredictionMode::kMax;
  if (name == "mid") return PredictionMode::kMid;
  fail(ErrorCode::kInvalidArgument, "unknown prediction mode: " + name);
}

const char* to_string(PredictionMode mode) {
  switch (mode) {
    case PredictionMode::kLs: return "ls";
    case PredictionMode::kMax: return "max";
    case PredictionMode::kMid: return "mid";
  }
  return "ls";
}

VectorXd predict(const FitResult& fit, const MatrixXd& X0, PredictionMode mode) {
  const Index n = X0.rows();
  VectorXd out(n);
  switch (mode) {
    case PredictionMode::kLs: {
      if (X0.cols() != fit.beta_ls.size())
        fail(ErrorCode::kInvalidArgument, "X0 width disagrees with the LS fit");
      for (Index i = 0; i < n; ++i)
        out(i) = fit.beta_ls.dot(X0.row(i)) + fit.intercept_ls;
      return out;
    }
    case PredictionMode::kMax: {
      if (X0.cols() != fit.beta.size())
        fail(ErrorCode::kInvalidArgument, "X0 width disagrees with the fit");
      if (!fit.mu_upper)
        fail(ErrorCode::kInvalidArgument, "fit carries no upper expectation");
      for (Index i = 0; i < n; ++i)
        out(i) = fit.beta.dot(X0.row(i)) + *fit.mu_upper;
      return out;
    }
    case PredictionMode::kMid: {
      if (X0.cols() != fit.beta.size())
        fail(ErrorCode::kInvalidArgument, "X0 width disagrees with the fit");
      if (!fit.mu_upper)
        fail(ErrorCode::kInvalidArgument, "fit carries no upper expectation");
      if (!fit.mu_lower)
        fail(ErrorCode::kMissingLowerExpectation,
             "mid prediction needs the lower expectation");
      const double mid = (*fit.mu_lower + *fit.mu_upper) / 2.0;
      for (Index i = 0; i < n; ++i) out(i) = fit.beta.dot(X0.row(i)) + mid;
      return out;
    }
  }
  fail(ErrorCode::kInvalidArgument, "unknown prediction mode");
}

namespace {

// ranks of the test points by observed y descending (stable), and of the
// predictions when pairing independently
std::vector<Index> descending_order(const VectorXd& v) {
  std::vector<Index> idx(static_cast<size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::sort(idx.begin(), idx.end(), [&](Index a, Index b) {
    if (v(a) != v(b)) return v(a) > v(b);
    return a < b;
  });
  return idx;
}

void check_pair_sizes(const VectorXd& y_test, const VectorXd& y_hat, Index m,
                      Index min_m) {
  if (y_test.size() != y_hat.size())
    fail(ErrorCode::kInvalidArgument, "test and prediction lengths disagree");
  if (m > y_test.size()) fail(ErrorCode::kMTooLarge, "m exceeds the test size");
  if (m < min_m) fail(ErrorCode::kInvalidArgument, "m too small");
}

}  // namespace

double ape_top_m(const VectorXd& y_test, const VectorXd& y_hat, Index m,
                 bool independent_pairing) {
  check_pair_sizes(y_test, y_hat, m, 1);
  const auto order = descending_order(y_test);
  double s = 0.0;
  if (independent_pairing) {
    const auto hat_order = descending_order(y_hat);
    for (Index r = 0; r < m; ++r) {
      const double d = y_test(order[static_cast<size_t>(r)]) -
                       y_hat(hat_order[static_cast<size_t>(r)]);
      s += d * d;
    }
  } else {
    for (Index r = 0; r < m; ++r) {
      const Index i = order[static_cast<size_t>(r)];
      const double d = y_test(i) - y_hat(i);
      s += d * d;
    }
  }
  return s / static_cast<double>(m);
}

double r2_top_m(const VectorXd& y_test, const VectorXd& y_hat, Index m,
                bool independent_pairing) {
  check_pair_sizes(y_test, y_hat, m, 2);
  const auto order = descending_order(y_test);
  double y_bar = 0.0;
  for (Index r = 0; r < m; ++r) y_bar += y_test(order[static_cast<size_t>(r)]);
  y_bar /= static_cast<double>(m);
  double ss_tot = 0.0;
  for (Index r = 0; r < m; ++r) {
    const double d = y_test(order[static_cast<size_t>(r)]) - y_bar;
    ss_tot += d * d;
  }
  if (ss_tot <= 0.0)
    fail(ErrorCode::kZeroDenominator, "top-m observations are constant");
  const double ss_res = ape_top_m(y_test, y_hat, m, independent_pairing) *
                        static_cast<double>(m);
  return 1.0 - ss_res / ss_tot;
}

std::vector<HistogramBin> histogram(const VectorXd& values, Index bins) {
  if (bins < 1) fail(ErrorCode::kInvalidArgument, "need at least one bin");
  if (values.size() == 0) fail(ErrorCode::kInvalidArgument, "empty sample");
  if (!values.allFinite()) fail(ErrorCode::kNonFinite, "non-finite values");
  const double lo = values.minCoeff();
  const double hi = values.maxCoeff();
  std::vector<HistogramBin> out(static_cast<size_t>(bins));
  const double width = (hi - lo) / static_cast<double>(bins);
  for (Index b = 0; b < bins; ++b) {
    out[static_cast<size_t>(b)].left = lo + width * static_cast<double>(b);
    out[static_cast<size_t>(b)].right = lo + width * static_cast<double>(b + 1);
  }
  out.back().right = hi;
  for (Index i = 0; i < values.size(); ++i) {
    Index b = width > 0.0
                  ? static_cast<Index>((values(i) - lo) / width)
                  : 0;
    b = std::clamp<Index>(b, 0, bins - 1);
    out[static_cast<size_t>(b)].count++;
  }
  return out;
}

Index count_local_maxima(const std::vector<HistogramBin>& bins) {
  Index count = 0;
  for (size_t i = 0; i < bins.size(); ++i) {
    const Index c = bins[i].count;
    const Index left = i > 0 ? bins[i - 1].count : -1;
    const Index right = i + 1 < bins.size() ? bins[i + 1].count : -1;
    if (c > left && c > right) ++count;
  }
  return count;
}

}  // namespace pmls
