#include "pmls/types.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace pmls {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kTooFewRows: return "TooFewRows";
    case ErrorCode::kNTooSmall: return "NTooSmall";
    case ErrorCode::kEmptyFold: return "EmptyFold";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kUnparseableCell: return "UnparseableCell";
    case ErrorCode::kMissingLowerExpectation: return "MissingLowerExpectation";
    case ErrorCode::kMTooLarge: return "MTooLarge";
    case ErrorCode::kZeroDenominator: return "ZeroDenominator";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return 2;
    case ErrorCode::kNonFinite:
    case ErrorCode::kTooFewRows:
    case ErrorCode::kSchemaMismatch:
    case ErrorCode::kUnparseableCell:
    case ErrorCode::kMTooLarge:
    case ErrorCode::kIoError:
      return 3;
    default:
      return 4;
  }
}

Dataset Dataset::rows(const std::vector<Index>& idx) const {
  Dataset out;
  out.X.resize(static_cast<Index>(idx.size()), X.cols());
  out.Y.resize(static_cast<Index>(idx.size()));
  if (!labels.empty()) out.labels.resize(idx.size());
  for (size_t i = 0; i < idx.size(); ++i) {
    out.X.row(static_cast<Index>(i)) = X.row(idx[i]);
    out.Y(static_cast<Index>(i)) = Y(idx[i]);
    if (!labels.empty()) out.labels[i] = labels[static_cast<size_t>(idx[i])];
  }
  return out;
}

Dataset validate_dataset(MatrixXd X, VectorXd Y, std::vector<int> labels) {
  if (X.rows() != Y.size())
    fail(ErrorCode::kInvalidArgument, "X and Y row counts disagree");
  if (!labels.empty() && static_cast<Index>(labels.size()) != Y.size())
    fail(ErrorCode::kInvalidArgument, "label count disagrees with rows");
  const Index n = X.rows();
  const Index p = X.cols();
  if (n < p + 2) {
    std::ostringstream os;
    os << "need at least p+2 = " << (p + 2) << " rows, got " << n;
    fail(ErrorCode::kTooFewRows, os.str());
  }
  if (!X.allFinite() || !Y.allFinite())
    fail(ErrorCode::kNonFinite, "dataset contains non-finite entries");
  if (p > 0) {
    Eigen::JacobiSVD<MatrixXd> svd(X);
    const auto& sv = svd.singularValues();
    if (sv(0) <= 0.0 || sv(sv.size() - 1) / sv(0) < 1e-10)
      fail(ErrorCode::kRankDeficient, "column rank of X below p");
  }
  Dataset ds;
  ds.X = std::move(X);
  ds.Y = std::move(Y);
  ds.labels = std::move(labels);
  return ds;
}

VectorXd squared_quantities(const Dataset& ds, const VectorXd& beta, double mu) {
  if (beta.size() != ds.n_cols())
    fail(ErrorCode::kInvalidArgument, "beta length disagrees with p");
  VectorXd r = ds.Y;
  if (beta.size() > 0) r -= ds.X * beta;
  r.array() -= mu;
  return r.array().square();
}

double UncertainScenario::upper_expectation() const {
  double m = components.front().mean;
  for (const auto& c : components) m = std::max(m, c.mean);
  return m;
}

double UncertainScenario::lower_expectation() const {
  double m = components.front().mean;
  for (const auto& c : components) m = std::min(m, c.mean);
  return m;
}

Index UncertainScenario::star_index() const {
  const double upper = upper_expectation();
  Index best = 0;
  double best_val = -1.0;
  for (size_t t = 0; t < components.size(); ++t) {
    const double d = components[t].mean - upper;
    const double val = components[t].variance + d * d;
    if (val > best_val) {
      best_val = val;
      best = static_cast<Index>(t);
    }
  }
  return best;
}

double UncertainScenario::sigma_star_sq() const {
  const auto& c = components[static_cast<size_t>(star_index())];
  const double d = c.mean - upper_expectation();
  return c.variance + d * d;
}

void UncertainScenario::validate() const {
  if (components.empty())
    fail(ErrorCode::kInvalidArgument, "scenario needs at least one component");
  if (weights.size() != components.size())
    fail(ErrorCode::kInvalidArgument, "weight count disagrees with components");
  double sum = 0.0;
  for (double w : weights) {
    if (w <= 0.0) fail(ErrorCode::kInvalidArgument, "weights must be positive");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    fail(ErrorCode::kInvalidArgument, "weights must sum to 1");
  for (const auto& c : components)
    if (!(c.variance > 0.0))
      fail(ErrorCode::kInvalidArgument, "component variances must be positive");
}

UncertainScenario UncertainScenario::uniform(std::vector<ScenarioComponent> comps) {
  UncertainScenario s;
  s.weights.assign(comps.size(), 1.0 / static_cast<double>(comps.size()));
  s.components = std::move(comps);
  s.validate();
  return s;
}

void TuningParams::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    fail(ErrorCode::kInvalidArgument, "epsilon must lie in (0,1)");
  if (lambda && *lambda < 0.0)
    fail(ErrorCode::kInvalidArgument, "lambda must be nonnegative");
  if (lambda_tilde && *lambda_tilde < 0.0)
    fail(ErrorCode::kInvalidArgument, "lambdaTilde must be nonnegative");
  if (lambda1 && *lambda1 < 0.0)
    fail(ErrorCode::kInvalidArgument, "lambda1 must be nonnegative");
}

}  // namespace pmls
