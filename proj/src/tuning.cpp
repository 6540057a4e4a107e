#include "pmls/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pmls/estimators.hpp"
#include "pmls/ordered_view.hpp"
#include "pmls/rng.hpp"

namespace pmls {

void CvGrid::validate() const {
  if (folds < 2) fail(ErrorCode::kInvalidArgument, "folds must be >= 2");
  if (lambda_grid.empty() || n_grid.empty())
    fail(ErrorCode::kInvalidArgument, "grids must be non-empty");
  if (!std::is_sorted(lambda_grid.begin(), lambda_grid.end()) ||
      !std::is_sorted(n_grid.begin(), n_grid.end()))
    fail(ErrorCode::kInvalidArgument, "grids must be sorted ascending");
  for (double l : lambda_grid)
    if (l < 0.0) fail(ErrorCode::kInvalidArgument, "lambda grid must be nonnegative");
}

CvGrid CvGrid::defaults(Index n_rows, Index n_cols, uint64_t seed) {
  CvGrid g;
  g.seed = seed;
  const double N = static_cast<double>(n_rows);
  g.lambda_grid = {0.0, std::pow(N, 0.3 - 1.0), std::pow(N, 0.5 - 1.0),
                   std::pow(N, 0.7 - 1.0)};
  std::sort(g.lambda_grid.begin(), g.lambda_grid.end());
  const Index lo = std::max<Index>({4, n_cols + 2});
  for (int k = 1; k <= 10; ++k) {
    Index n = static_cast<Index>(std::lround(0.1 * k * N));
    n = std::clamp(n, lo, n_rows);
    if (g.n_grid.empty() || g.n_grid.back() != n) g.n_grid.push_back(n);
  }
  return g;
}

std::vector<int> make_folds(Index n_rows, int folds, uint64_t seed) {
  if (folds < 2) fail(ErrorCode::kInvalidArgument, "folds must be >= 2");
  if (n_rows < folds) fail(ErrorCode::kEmptyFold, "more folds than rows");
  std::vector<Index> perm(static_cast<size_t>(n_rows));
  std::iota(perm.begin(), perm.end(), Index{0});
  Philox4x32 rng(seed, 0x666f6c64ULL);  // dedicated fold stream
  shuffle_inplace(perm, rng);
  std::vector<int> fold_of(static_cast<size_t>(n_rows));
  for (Index i = 0; i < n_rows; ++i)
    fold_of[static_cast<size_t>(perm[static_cast<size_t>(i)])] =
        static_cast<int>(i % folds);
  return fold_of;
}

namespace {

struct FoldSplit {
  std::vector<Index> train;
  std::vector<Index> test;
};

std::vector<FoldSplit> split_indices(Index n_rows, int folds, uint64_t seed) {
  const auto fold_of = make_folds(n_rows, folds, seed);
  std::vector<FoldSplit> out(static_cast<size_t>(folds));
  for (Index i = 0; i < n_rows; ++i) {
    for (int f = 0; f < folds; ++f) {
      if (fold_of[static_cast<size_t>(i)] == f)
        out[static_cast<size_t>(f)].test.push_back(i);
      else
        out[static_cast<size_t>(f)].train.push_back(i);
    }
  }
  for (const auto& s : out)
    if (s.test.empty() || s.train.empty())
      fail(ErrorCode::kEmptyFold, "empty cross-validation fold");
  return out;
}

Index scaled_n(Index n, Index part, Index total, Index lo, Index hi) {
  const double frac = static_cast<double>(n) * static_cast<double>(part) /
                      static_cast<double>(total);
  return std::clamp<Index>(static_cast<Index>(std::llround(frac)), lo, hi);
}

// shared selection loop; fit_and_loss(theta, lambda, n, fold) returns the
// held-out top-n_f sum and writes the truncation count
template <typename FitLoss>
std::pair<double, Index> select_over_grid(const CvGrid& grid, double complexity_mult,
                                          Index n_rows, std::vector<CvEntry>* table,
                                          FitLoss&& fit_and_loss) {
  double best_cv = std::numeric_limits<double>::infinity();
  double best_lambda = grid.lambda_grid.front();
  Index best_n = grid.n_grid.front();
  for (double lambda : grid.lambda_grid) {
    for (Index n : grid.n_grid) {
      if (n > n_rows) continue;
      double loss = 0.0;
      Index m_total = 0;
      fit_and_loss(lambda, n, &loss, &m_total);
      const double holdout = loss / static_cast<double>(m_total);
      const double cv =
          holdout +
          complexity_mult * std::log(static_cast<double>(n)) / static_cast<double>(n);
      if (table) table->push_back({lambda, n, cv, holdout});
      if (cv < best_cv) {  // strict: ties keep smallest lambda, then smallest n
        best_cv = cv;
        best_lambda = lambda;
        best_n = n;
      }
    }
  }
  return {best_lambda, best_n};
}

double top_sum(const VectorXd& values, Index m) {
  OrderedView v = order_view(values);
  double s = 0.0;
  for (Index r = 0; r < m; ++r) s += v.values(r);
  return s;
}

TuningParams select_theta_impl(const Dataset& ds, const CvGrid& grid, bool improved,
                               std::vector<CvEntry>* table) {
  grid.validate();
  const Index N = ds.n_rows();
  const Index p = ds.n_cols();
  const auto splits = split_indices(N, grid.folds, grid.seed);
  const Index lo = std::max<Index>(4, p + 2);

  auto fit_and_loss = [&](double lambda, Index n, double* loss, Index* m_total) {
    for (const auto& split : splits) {
      const Index tr = static_cast<Index>(split.train.size());
      const Index te = static_cast<Index>(split.test.size());
      const Index n_train = scaled_n(n, tr, N, lo, tr);
      const Index n_test = scaled_n(n, te, N, 1, te);
      Dataset train = ds.rows(split.train);
      TuningParams t;
      t.lambda = lambda;
      t.n_lambda = n_train;
      if (improved) t.lambda1 = lambda;
      const FitResult fit =
          improved ? pmls_improved(train, t) : pmls_first_step(train, t);
      Dataset test = ds.rows(split.test);
      const VectorXd g = squared_quantities(test, fit.beta, fit.mu_star);
      *loss += top_sum(g, n_test);
      *m_total += n_test;
    }
  };

  const auto [lambda, n] = select_over_grid(grid, static_cast<double>(p) + 2.0,
                                            N, table, fit_and_loss);
  TuningParams out;
  out.lambda = lambda;
  out.n_lambda = n;
  if (improved) out.lambda1 = lambda;
  return out;
}

// Second-step / sample criterion: held-out values ordered descending,
// truncated at the fold-scaled n, squared deviation from the training fit.
TuningParams select_theta_tilde_impl(const VectorXd& h, const CvGrid& grid,
                                     std::vector<CvEntry>* table) {
  grid.validate();
  const Index N = h.size();
  const auto splits = split_indices(N, grid.folds, grid.seed);

  auto fit_and_loss = [&](double lambda, Index n, double* loss, Index* m_total) {
    for (const auto& split : splits) {
      const Index tr = static_cast<Index>(split.train.size());
      const Index te = static_cast<Index>(split.test.size());
      const Index n_train = scaled_n(n, tr, N, 1, tr);
      const Index n_test = scaled_n(n, te, N, 1, te);

      VectorXd h_train(tr);
      for (Index i = 0; i < tr; ++i) h_train(i) = h(split.train[static_cast<size_t>(i)]);
      OrderedView tv = order_view(h_train);
      double mu_hat = 0.0;
      for (Index r = 0; r < n_train; ++r) mu_hat += tv.values(r);
      mu_hat /= static_cast<double>(n_train);
      (void)lambda;  // the training fit at fixed n does not depend on lambda

      VectorXd h_test(te);
      for (Index i = 0; i < te; ++i) h_test(i) = h(split.test[static_cast<size_t>(i)]);
      OrderedView sv = order_view(h_test);
      for (Index r = 0; r < n_test; ++r) {
        const double d = sv.values(r) - mu_hat;
        *loss += d * d;
      }
      *m_total += n_test;
    }
  };

  const auto [lambda, n] = select_over_grid(grid, 2.0, N, table, fit_and_loss);
  TuningParams out;
  out.lambda_tilde = lambda;
  out.n_lambda_tilde = n;
  return out;
}

}  // namespace

TuningParams cv_select_theta(const Dataset& ds, const CvGrid& grid,
                             std::vector<CvEntry>* table) {
  return select_theta_impl(ds, grid, false, table);
}

TuningParams cv_select_theta_improved(const Dataset& ds, const CvGrid& grid,
                                      std::vector<CvEntry>* table) {
  return select_theta_impl(ds, grid, true, table);
}

TuningParams cv_select_theta_tilde(const Dataset& ds, const VectorXd& beta,
                                   const CvGrid& grid,
                                   std::vector<CvEntry>* table) {
  if (beta.size() != ds.n_cols())
    fail(ErrorCode::kInvalidArgument, "beta length disagrees with p");
  VectorXd h = ds.Y;
  if (beta.size() > 0) h -= ds.X * beta;
  return select_theta_tilde_impl(h, grid, table);
}

TuningParams cv_select_theta_sample(const VectorXd& y, const CvGrid& grid,
                                    std::vector<CvEntry>* table) {
  return select_theta_tilde_impl(y, grid, table);
}

}  // namespace pmls
