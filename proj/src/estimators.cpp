#include "pmls/estimators.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "pmls/stats.hpp"

namespace pmls {

namespace {

constexpr int kMaxAlternations = 50;
// Below this sample size the per-n search enumerates every mu-interval
// ranking partition instead of relying on seeded alternation alone.
constexpr Index kPartitionSweepLimit = 16;

VectorXd mean_rows(const MatrixXd& X, const std::vector<Index>& idx) {
  VectorXd m = VectorXd::Zero(X.cols());
  for (Index i : idx) m += X.row(i).transpose();
  if (!idx.empty()) m /= static_cast<double>(idx.size());
  return m;
}

double mean_over(const VectorXd& v, const std::vector<Index>& idx) {
  double s = 0.0;
  for (Index i : idx) s += v(i);
  return idx.empty() ? 0.0 : s / static_cast<double>(idx.size());
}

double mean_sq_over(const VectorXd& v, const std::vector<Index>& idx) {
  double s = 0.0;
  for (Index i : idx) s += v(i) * v(i);
  return idx.empty() ? 0.0 : s / static_cast<double>(idx.size());
}

// prefix[k] = sum of the first k entries
std::vector<double> prefix_sums(const VectorXd& v) {
  std::vector<double> p(static_cast<size_t>(v.size()) + 1, 0.0);
  for (Index i = 0; i < v.size(); ++i)
    p[static_cast<size_t>(i) + 1] = p[static_cast<size_t>(i)] + v(i);
  return p;
}

std::vector<double> prefix_sq_sums(const VectorXd& v) {
  std::vector<double> p(static_cast<size_t>(v.size()) + 1, 0.0);
  for (Index i = 0; i < v.size(); ++i)
    p[static_cast<size_t>(i) + 1] = p[static_cast<size_t>(i)] + v(i) * v(i);
  return p;
}

// half-split first-moment difference over the top-n ordered values
double half_diff(const std::vector<double>& prefix, Index n) {
  const Index h = n / 2;
  const double mean_u = (prefix[static_cast<size_t>(h)]) / static_cast<double>(h);
  const double mean_l = (prefix[static_cast<size_t>(n)] -
                         prefix[static_cast<size_t>(h)]) /
                        static_cast<double>(n - h);
  return mean_u - mean_l;
}

}  // namespace

std::vector<Index> default_n_grid(Index n_rows, Index n_cols) {
  const Index lo = std::max<Index>({4, n_cols + 2, n_rows / 20});
  if (lo > n_rows) fail(ErrorCode::kNTooSmall, "too few rows for any valid n");
  const Index stride = n_rows <= 500 ? 1 : (n_rows + 199) / 200;
  std::vector<Index> grid;
  for (Index n = lo; n < n_rows; n += stride) grid.push_back(n);
  grid.push_back(n_rows);
  return grid;
}

OlsFit ols_fit(const Dataset& ds, CenterMode center) {
  const Index n = ds.n_rows();
  const Index p = ds.n_cols();
  OlsFit fit;
  VectorXd y = ds.Y;
  const double y_bar = ds.Y.mean();
  if (center != CenterMode::kNone) y.array() -= y_bar;
  if (p == 0) {
    fit.beta.resize(0);
    fit.residuals = y;
    fit.intercept = center == CenterMode::kNone ? 0.0 : y_bar;
    return fit;
  }
  MatrixXd X = ds.X;
  VectorXd x_bar = VectorXd::Zero(p);
  if (center == CenterMode::kBoth) {
    x_bar = ds.X.colwise().mean();
    X.rowwise() -= x_bar.transpose();
  }
  Eigen::ColPivHouseholderQR<MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < p)
    fail(ErrorCode::kRankDeficient, "design matrix rank-deficient in ols_fit");
  fit.beta = qr.solve(y);
  fit.residuals = y - X * fit.beta;
  switch (center) {
    case CenterMode::kNone: fit.intercept = 0.0; break;
    case CenterMode::kYOnly: fit.intercept = y_bar; break;
    case CenterMode::kBoth: fit.intercept = y_bar - x_bar.dot(fit.beta); break;
  }
  return fit;
}

PenaltyStats penalty_stats(const Dataset& ds, const OrderedView& view, Index n,
                           const VectorXd& ols_residuals, const VectorXd& beta,
                           double mu) {
  if (n > view.size())
    fail(ErrorCode::kInvalidArgument, "n exceeds the ordered view");
  if (n < 4)
    fail(ErrorCode::kNTooSmall, "penalty statistics need n >= 4");
  if (ols_residuals.size() != ds.n_rows())
    fail(ErrorCode::kInvalidArgument, "OLS residual length disagrees with N");

  const auto upper = view.upper_half(n);
  const auto lower = view.lower_half(n);

  PenaltyStats s;
  s.upsilon1 = mean_sq_over(ols_residuals, upper) - mean_sq_over(ols_residuals, lower);
  s.upsilon2_a = mean_sq_over(ds.Y, upper) - mean_sq_over(ds.Y, lower);
  s.upsilon2_b = mean_over(ds.Y, upper) - mean_over(ds.Y, lower);
  s.lambda_stat = mean_over(ols_residuals, upper) - mean_over(ols_residuals, lower);

  VectorXd h = ds.Y;
  if (beta.size() > 0) h -= ds.X * beta;
  s.gamma = mean_over(h, upper) - mean_over(h, lower);

  std::vector<Index> all = upper;
  all.insert(all.end(), lower.begin(), lower.end());
  s.x_bar = mean_rows(ds.X, all);

  const double xb = beta.size() > 0 ? s.x_bar.dot(beta) : 0.0;
  s.delta_hat = s.upsilon2(mu) - 2.0 * xb * s.upsilon1;
  return s;
}

double first_step_objective(const Dataset& ds, const VectorXd& ols_residuals,
                            const VectorXd& beta, double mu, Index n,
                            double lambda, double lambda1) {
  const OrderedView view = order_view(squared_quantities(ds, beta, mu));
  double data = 0.0;
  for (Index r = 0; r < n; ++r) data += view.values(r);
  data /= static_cast<double>(n);
  const PenaltyStats s = penalty_stats(ds, view, n, ols_residuals, beta, mu);
  double obj = data + lambda * std::abs(s.delta_hat);
  if (lambda1 != 0.0) {
    const OrderedView d_view = order_view(ols_residuals);
    const PenaltyStats t = penalty_stats(ds, d_view, n, ols_residuals, beta, mu);
    obj += lambda1 * std::abs(t.lambda_stat);
  }
  return obj;
}

namespace detail {

SubproblemResult solve_penalized_subproblem(const MatrixXd& Z, const VectorXd& y,
                                            double lambda, double a,
                                            const VectorXd& l) {
  const Index n = Z.rows();
  const Index q = Z.cols();
  if (n < q) fail(ErrorCode::kNTooSmall, "subproblem has fewer rows than unknowns");
  Eigen::ColPivHouseholderQR<MatrixXd> qr(Z);
  qr.setThreshold(1e-10);
  if (qr.rank() < q)
    fail(ErrorCode::kRankDeficient, "selected subset is rank-deficient");

  const MatrixXd A = Z.transpose() * Z;
  const VectorXd c = Z.transpose() * y;
  const auto ldlt = A.ldlt();
  const double nn = static_cast<double>(n);

  auto objective = [&](const VectorXd& theta) {
    return (y - Z * theta).squaredNorm() / nn + lambda * std::abs(a + l.dot(theta));
  };

  SubproblemResult best;
  best.objective = std::numeric_limits<double>::infinity();
  auto consider = [&](const VectorXd& theta, int branch) {
    best.candidates.push_back(theta);
    const double obj = objective(theta);
    if (obj < best.objective) {
      best.theta = theta;
      best.objective = obj;
      best.branch = branch;
    }
  };

  if (lambda == 0.0 || l.isZero(0.0)) {
    consider(ldlt.solve(c), 2);
    return best;
  }

  const VectorXd theta_plus = ldlt.solve(c - (nn * lambda / 2.0) * l);
  if (a + l.dot(theta_plus) >= -1e-12) consider(theta_plus, +1);
  const VectorXd theta_minus = ldlt.solve(c + (nn * lambda / 2.0) * l);
  if (a + l.dot(theta_minus) <= 1e-12) consider(theta_minus, -1);

  // kink: minimize the quadratic subject to a + l'theta = 0
  MatrixXd K(q + 1, q + 1);
  K.topLeftCorner(q, q) = (2.0 / nn) * A;
  K.topRightCorner(q, 1) = l;
  K.bottomLeftCorner(1, q) = l.transpose();
  K(q, q) = 0.0;
  VectorXd rhs(q + 1);
  rhs.head(q) = (2.0 / nn) * c;
  rhs(q) = -a;
  const VectorXd sol = K.fullPivLu().solve(rhs);
  if (sol.allFinite()) consider(sol.head(q), 0);

  // unpenalized LS solution as a fallback step
  consider(ldlt.solve(c), 2);

  return best;
}

}  // namespace detail

namespace {

struct FirstStepSolution {
  VectorXd beta;
  double mu = 0.0;
  Index n = 0;
  double objective = std::numeric_limits<double>::infinity();
  double delta_hat = 0.0;
  double lambda = 0.0;
  double lambda1 = 0.0;
  int iterations = 0;
  bool converged = true;
};

// true objective at (beta, mu, n): re-ranked data term plus penalties
double objective_at(const Dataset& ds, const VectorXd& D, const VectorXd& beta,
                    double mu, Index n, double lambda, double lambda1_term,
                    double* delta_hat_out = nullptr) {
  const OrderedView view = order_view(squared_quantities(ds, beta, mu));
  double data = 0.0;
  for (Index r = 0; r < n; ++r) data += view.values(r);
  data /= static_cast<double>(n);
  const PenaltyStats stats = penalty_stats(ds, view, n, D, beta, mu);
  if (delta_hat_out) *delta_hat_out = stats.delta_hat;
  return data + lambda * std::abs(stats.delta_hat) + lambda1_term;
}

// One alternation pass at fixed n from a given start; returns the best
// iterate by the true (re-ranked) objective.
FirstStepSolution alternate_at_n(const Dataset& ds, const VectorXd& D,
                                 Index n, double lambda, double lambda1,
                                 double lambda1_term, VectorXd beta, double mu) {
  const Index p = ds.n_cols();
  MatrixXd Zfull(ds.n_rows(), p + 1);
  if (p > 0) Zfull.leftCols(p) = ds.X;
  Zfull.col(p).setOnes();

  FirstStepSolution best;
  best.n = n;
  best.lambda = lambda;
  best.lambda1 = lambda1;

  OrderedView view = order_view(squared_quantities(ds, beta, mu));
  {  // score the starting point too
    double data = 0.0;
    for (Index r = 0; r < n; ++r) data += view.values(r);
    data /= static_cast<double>(n);
    const PenaltyStats stats = penalty_stats(ds, view, n, D, beta, mu);
    best.beta = beta;
    best.mu = mu;
    best.objective = data + lambda * std::abs(stats.delta_hat) + lambda1_term;
    best.delta_hat = stats.delta_hat;
  }

  std::vector<Index> prev_membership;
  for (int iter = 0; iter < kMaxAlternations; ++iter) {
    std::vector<Index> membership(view.original_index.begin(),
                                  view.original_index.begin() + n);
    const PenaltyStats stats = penalty_stats(ds, view, n, D, beta, mu);

    MatrixXd Z(n, p + 1);
    VectorXd y(n);
    for (Index r = 0; r < n; ++r) {
      Z.row(r) = Zfull.row(membership[static_cast<size_t>(r)]);
      y(r) = ds.Y(membership[static_cast<size_t>(r)]);
    }
    VectorXd l(p + 1);
    l.head(p) = -2.0 * stats.upsilon1 * stats.x_bar;
    l(p) = -2.0 * stats.upsilon2_b;
    detail::SubproblemResult sub;
    try {
      sub = detail::solve_penalized_subproblem(Z, y, lambda, stats.upsilon2_a, l);
    } catch (const Error&) {
      best.converged = true;  // degenerate selection; keep the best iterate
      return best;
    }

    // step to the branch candidate that is best under the re-ranked
    // objective; the fixed-split winner can sit on the wrong side of a
    // ranking change
    double step_obj = std::numeric_limits<double>::infinity();
    double step_delta = 0.0;
    VectorXd step_theta;
    for (const VectorXd& cand : sub.candidates) {
      double dh = 0.0;
      const double obj =
          objective_at(ds, D, cand.head(p), cand(p), n, lambda, lambda1_term, &dh);
      if (obj < step_obj) {
        step_obj = obj;
        step_delta = dh;
        step_theta = cand;
      }
    }
    beta = step_theta.head(p);
    mu = step_theta(p);
    view = order_view(squared_quantities(ds, beta, mu));

    if (step_obj < best.objective) {
      best.beta = beta;
      best.mu = mu;
      best.objective = step_obj;
      best.delta_hat = step_delta;
    }
    best.iterations = iter + 1;

    std::vector<Index> new_membership(view.original_index.begin(),
                                      view.original_index.begin() + n);
    if (new_membership == membership || new_membership == prev_membership) {
      best.converged = true;
      return best;
    }
    prev_membership = std::move(membership);
    best.converged = false;
  }
  return best;
}

// Small-sample exhaustive search: for each slope in a work queue, the mu axis
// is cut at every midpoint of two residuals (the ranking partition is
// constant between cuts), each partition's subproblem is solved exactly, and
// the candidates' slopes feed back into the queue. On these sizes the search
// reaches the global minimum that seeded alternation alone can miss.
void partition_sweep(const Dataset& ds, const VectorXd& D, Index n,
                     double lambda, double lambda1_term, const VectorXd& beta_ls,
                     const VectorXd& beta_centered, double mu_span,
                     FirstStepSolution* sol,
                     std::vector<std::pair<double, VectorXd>>* pool) {
  auto pool_push = [&](double obj, const VectorXd& beta, double mu) {
    VectorXd theta(beta.size() + 1);
    theta.head(beta.size()) = beta;
    theta(beta.size()) = mu;
    for (auto& [o, t] : *pool)
      if ((t - theta).lpNorm<Eigen::Infinity>() < 1e-8) {
        if (obj < o) o = obj;
        return;
      }
    pool->emplace_back(obj, theta);
    std::sort(pool->begin(), pool->end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    if (pool->size() > 12) pool->resize(12);
  };
  const Index N = ds.n_rows();
  const Index p = ds.n_cols();
  MatrixXd Zfull(N, p + 1);
  if (p > 0) Zfull.leftCols(p) = ds.X;
  Zfull.col(p).setOnes();

  std::vector<VectorXd> queue = {beta_ls, beta_centered};
  if (p == 1) {
    // dense slope grid: partitions change when the slope moves residual
    // pairs past each other, at scale (residual spread / covariate spread)
    const double x_span =
        ds.X.col(0).maxCoeff() - ds.X.col(0).minCoeff() + 1e-12;
    const double width =
        2.0 * (std::abs(beta_ls(0) - beta_centered(0)) + mu_span / x_span);
    for (int k = 0; k < 25; ++k) {
      VectorXd b(1);
      b << beta_centered(0) - width + 2.0 * width * k / 24.0;
      queue.push_back(b);
    }
  }
  auto push_candidate = [&](const VectorXd& b) {
    if (queue.size() >= 64) return;
    for (const VectorXd& q : queue)
      if ((q - b).lpNorm<Eigen::Infinity>() < 1e-10) return;
    queue.push_back(b);
  };

  for (size_t next = 0; next < queue.size(); ++next) {
    const VectorXd b_seed = queue[next];
    VectorXd h = ds.Y;
    if (p > 0) h -= ds.X * b_seed;
    std::vector<double> cuts;
    for (Index i = 0; i < N; ++i)
      for (Index j = i + 1; j < N; ++j) cuts.push_back((h(i) + h(j)) / 2.0);
    cuts.push_back(h.minCoeff() - 1.0);
    cuts.push_back(h.maxCoeff() + 1.0);
    std::sort(cuts.begin(), cuts.end());

    for (size_t k = 0; k + 1 < cuts.size(); ++k) {
      if (cuts[k + 1] - cuts[k] < 1e-13) continue;
      const double mu_rep = (cuts[k] + cuts[k + 1]) / 2.0;
      {  // the seed itself may already sit in the right valley
        double dh = 0.0;
        const double obj =
            objective_at(ds, D, b_seed, mu_rep, n, lambda, lambda1_term, &dh);
        pool_push(obj, b_seed, mu_rep);
        if (obj < sol->objective) {
          sol->beta = b_seed;
          sol->mu = mu_rep;
          sol->objective = obj;
          sol->delta_hat = dh;
          sol->converged = true;
        }
      }
      const OrderedView view = order_view(squared_quantities(ds, b_seed, mu_rep));
      const PenaltyStats stats = penalty_stats(ds, view, n, D, b_seed, mu_rep);
      MatrixXd Z(n, p + 1);
      VectorXd y(n);
      for (Index r = 0; r < n; ++r) {
        Z.row(r) = Zfull.row(view.original_index[static_cast<size_t>(r)]);
        y(r) = ds.Y(view.original_index[static_cast<size_t>(r)]);
      }
      VectorXd l(p + 1);
      l.head(p) = -2.0 * stats.upsilon1 * stats.x_bar;
      l(p) = -2.0 * stats.upsilon2_b;
      detail::SubproblemResult sub;
      try {
        sub = detail::solve_penalized_subproblem(Z, y, lambda, stats.upsilon2_a, l);
      } catch (const Error&) {
        continue;  // rank-deficient selection at this partition
      }
      for (const VectorXd& cand : sub.candidates) {
        double dh = 0.0;
        const double obj = objective_at(ds, D, cand.head(p), cand(p), n, lambda,
                                        lambda1_term, &dh);
        pool_push(obj, cand.head(p), cand(p));
        if (obj < sol->objective) {
          sol->beta = cand.head(p);
          sol->mu = cand(p);
          sol->objective = obj;
          sol->delta_hat = dh;
          sol->converged = true;
        }
        if (obj < sol->objective * 1.5 + 0.1) push_candidate(cand.head(p));
      }
    }
  }
}

// Nelder-Mead descent on the true objective, used as a small-sample polish;
// the simplex can track the narrow diagonal valleys the penalty carves out.
void nelder_mead_polish(const Dataset& ds, const VectorXd& D, Index n,
                        double lambda, double lambda1_term, const VectorXd& start,
                        double start_scale, FirstStepSolution* sol) {
  const Index p = ds.n_cols();
  const Index q = p + 1;
  auto f = [&](const VectorXd& theta) {
    return objective_at(ds, D, theta.head(p), theta(p), n, lambda, lambda1_term);
  };
  std::vector<VectorXd> simplex(static_cast<size_t>(q) + 1, start);
  std::vector<double> val(static_cast<size_t>(q) + 1);
  for (Index j = 0; j < q; ++j) simplex[static_cast<size_t>(j) + 1](j) += start_scale;
  for (size_t i = 0; i < simplex.size(); ++i) val[i] = f(simplex[i]);

  for (int iter = 0; iter < 300; ++iter) {
    std::vector<size_t> ord(simplex.size());
    std::iota(ord.begin(), ord.end(), size_t{0});
    std::sort(ord.begin(), ord.end(), [&](size_t a, size_t b) { return val[a] < val[b]; });
    const size_t lo = ord.front(), hi = ord.back(), second_hi = ord[ord.size() - 2];
    if (val[hi] - val[lo] < 1e-13) break;

    VectorXd centroid = VectorXd::Zero(q);
    for (size_t i = 0; i < simplex.size(); ++i)
      if (i != hi) centroid += simplex[i];
    centroid /= static_cast<double>(q);

    const VectorXd refl = centroid + (centroid - simplex[hi]);
    const double f_refl = f(refl);
    if (f_refl < val[lo]) {
      const VectorXd expand = centroid + 2.0 * (centroid - simplex[hi]);
      const double f_exp = f(expand);
      if (f_exp < f_refl) {
        simplex[hi] = expand;
        val[hi] = f_exp;
      } else {
        simplex[hi] = refl;
        val[hi] = f_refl;
      }
    } else if (f_refl < val[second_hi]) {
      simplex[hi] = refl;
      val[hi] = f_refl;
    } else {
      const VectorXd contract = centroid + 0.5 * (simplex[hi] - centroid);
      const double f_con = f(contract);
      if (f_con < val[hi]) {
        simplex[hi] = contract;
        val[hi] = f_con;
      } else {
        for (size_t i = 0; i < simplex.size(); ++i) {
          if (i == lo) continue;
          simplex[i] = simplex[lo] + 0.5 * (simplex[i] - simplex[lo]);
          val[i] = f(simplex[i]);
        }
      }
    }
  }
  size_t lo = 0;
  for (size_t i = 1; i < simplex.size(); ++i)
    if (val[i] < val[lo]) lo = i;
  if (val[lo] < sol->objective) {
    double dh = 0.0;
    sol->objective = objective_at(ds, D, simplex[lo].head(p), simplex[lo](p), n,
                                  lambda, lambda1_term, &dh);
    sol->beta = simplex[lo].head(p);
    sol->mu = simplex[lo](p);
    sol->delta_hat = dh;
  }
}

FitResult first_step_core(const Dataset& ds, const TuningParams& tuning,
                          bool improved) {
  tuning.validate();
  const Index N = ds.n_rows();
  const Index p = ds.n_cols();
  if (tuning.n_lambda && (*tuning.n_lambda > N || *tuning.n_lambda < 4))
    fail(ErrorCode::kInvalidArgument, "nLambda out of range");

  const OlsFit ols = ols_fit(ds, CenterMode::kNone);
  const VectorXd& D = ols.residuals;

  // spec initialization: OLS beta, mu0 = mean of positive OLS residuals
  double mu0;
  {
    double s = 0.0;
    Index cnt = 0;
    for (Index i = 0; i < N; ++i)
      if (D(i) > 0.0) {
        s += D(i);
        ++cnt;
      }
    mu0 = cnt > 0 ? s / static_cast<double>(cnt) : D.maxCoeff();
  }

  // Lambda_n lives on the descending OLS-residual ordering and is constant
  // in (beta, mu); tabulate once. The same prefix sums drive the per-n
  // edge initializations below.
  const std::vector<double> d_prefix = prefix_sums(order_view(D).values);
  const VectorXd beta_centered =
      p > 0 ? ols_fit(ds, CenterMode::kBoth).beta : ols.beta;
  const double d_spread = D.size() > 1 ? (D.maxCoeff() - D.minCoeff()) : 1.0;
  const double d_lo = D.minCoeff() - 0.25 * d_spread;
  const double d_hi = D.maxCoeff() + 0.25 * d_spread;

  std::vector<Index> grid;
  if (tuning.n_lambda)
    grid.push_back(*tuning.n_lambda);
  else
    grid = default_n_grid(N, p);

  FirstStepSolution best;
  VectorXd warm_beta;
  double warm_mu = 0.0;
  bool have_warm = false;

  for (Index n : grid) {
    const double lambda =
        tuning.lambda ? *tuning.lambda
                      : std::pow(static_cast<double>(n), tuning.epsilon - 1.0);
    double lambda1 = 0.0;
    if (improved)
      lambda1 = tuning.lambda1
                    ? *tuning.lambda1
                    : std::pow(static_cast<double>(n), tuning.epsilon - 1.0);
    const double lambda1_term =
        improved && lambda1 != 0.0 ? lambda1 * std::abs(half_diff(d_prefix, n)) : 0.0;

    // The alternation only finds fixed points near its start. Seed it from
    // both slope estimates and a mu sweep over the residual range (with mu
    // at one residual edge the top-n ranking picks the opposite tail), score
    // every seed on the true objective and alternate from the best few.
    const double top_mean =
        d_prefix[static_cast<size_t>(n)] / static_cast<double>(n);
    const double bottom_mean = (d_prefix[static_cast<size_t>(N)] -
                                d_prefix[static_cast<size_t>(N - n)]) /
                               static_cast<double>(n);
    std::vector<std::pair<VectorXd, double>> seeds;
    for (const VectorXd* b : {&ols.beta, &beta_centered}) {
      seeds.emplace_back(*b, mu0);
      seeds.emplace_back(*b, bottom_mean);
      seeds.emplace_back(*b, top_mean);
      for (int k = 0; k < 8; ++k)
        seeds.emplace_back(*b, d_lo + (d_hi - d_lo) * k / 7.0);
    }
    if (have_warm) seeds.emplace_back(warm_beta, warm_mu);

    std::vector<std::pair<double, size_t>> scored;
    for (size_t s = 0; s < seeds.size(); ++s)
      scored.emplace_back(objective_at(ds, D, seeds[s].first, seeds[s].second,
                                       n, lambda, lambda1_term),
                          s);
    std::sort(scored.begin(), scored.end());

    FirstStepSolution sol;
    sol.n = n;
    const size_t n_starts = std::min<size_t>(4, scored.size());
    for (size_t s = 0; s < n_starts; ++s) {
      const auto& [b0, m0] = seeds[scored[s].second];
      FirstStepSolution cand =
          alternate_at_n(ds, D, n, lambda, lambda1, lambda1_term, b0, m0);
      if (cand.objective < sol.objective) sol = cand;
    }

    if (N <= kPartitionSweepLimit) {
      std::vector<std::pair<double, VectorXd>> pool;
      partition_sweep(ds, D, n, lambda, lambda1_term, ols.beta, beta_centered,
                      d_hi - d_lo, &sol, &pool);
      {
        VectorXd theta(p + 1);
        theta.head(p) = sol.beta;
        theta(p) = sol.mu;
        pool.emplace_back(sol.objective, theta);
      }
      for (const auto& [obj0, theta0] : pool)
        for (double scale : {0.3, 0.05})
          nelder_mead_polish(ds, D, n, lambda, lambda1_term, theta0, scale, &sol);
    }
    warm_beta = sol.beta;
    warm_mu = sol.mu;
    have_warm = true;
    if (sol.objective < best.objective) best = sol;
  }

  if (!std::isfinite(best.objective))
    fail(ErrorCode::kNTooSmall, "no feasible n in the grid");

  FitResult fit;
  fit.beta = best.beta;
  fit.mu_star = best.mu;
  fit.n_selected = best.n;
  fit.residuals = ds.Y;
  if (p > 0) fit.residuals -= ds.X * fit.beta;
  fit.residuals.array() -= fit.mu_star;

  // plug-in covariance over the selected rows
  {
    const OrderedView view =
        order_view(squared_quantities(ds, fit.beta, fit.mu_star));
    std::vector<Index> sel(view.original_index.begin(),
                           view.original_index.begin() + best.n);
    std::vector<double> res_sel;
    res_sel.reserve(sel.size());
    for (Index i : sel) res_sel.push_back(fit.residuals(i));
    const double sigma_star_sq = sample_variance(res_sel);
    fit.diagnostics["sigma_star_sq"] = sigma_star_sq;

    MatrixXd phi = MatrixXd::Zero(p + 1, p + 1);
    for (Index i : sel) {
      VectorXd z(p + 1);
      z.head(p) = ds.X.row(i).transpose();
      z(p) = 1.0;
      phi += z * z.transpose();
    }
    phi /= static_cast<double>(sel.size());
    // pseudo-inverse keeps the plug-in covariance defined (and PSD) when the
    // selected rows are collinear
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(phi);
    const double cutoff = 1e-12 * std::max(1.0, eig.eigenvalues().maxCoeff());
    VectorXd inv_ev = eig.eigenvalues();
    for (Index j = 0; j < inv_ev.size(); ++j)
      inv_ev(j) = inv_ev(j) > cutoff ? 1.0 / inv_ev(j) : 0.0;
    const MatrixXd inv =
        eig.eigenvectors() * inv_ev.asDiagonal() * eig.eigenvectors().transpose();
    fit.cov_beta_mu =
        (sigma_star_sq / static_cast<double>(best.n)) * 0.5 * (inv + inv.transpose());
  }

  const std::vector<double> d2(D.data(), D.data() + D.size());
  std::vector<double> d_sq(d2.size());
  for (size_t i = 0; i < d2.size(); ++i) d_sq[i] = d2[i] * d2[i];
  const double skew = sample_skewness(d_sq);
  fit.diagnostics["objective"] = best.objective;
  fit.diagnostics["delta_hat"] = best.delta_hat;
  fit.diagnostics["iterations"] = static_cast<double>(best.iterations);
  fit.diagnostics["converged"] = best.converged ? 1.0 : 0.0;
  fit.diagnostics["lambda"] = best.lambda;
  if (improved) fit.diagnostics["lambda1"] = best.lambda1;
  fit.diagnostics["skewness_sq_residuals"] = skew;
  fit.diagnostics["c0_warning"] = std::abs(skew) < 0.1 ? 1.0 : 0.0;
  fit.beta_ls = ols.beta;
  fit.intercept_ls = ols.intercept;
  return fit;
}

SecondStepResult second_step_on(const VectorXd& h, const Dataset& ds,
                                const TuningParams& tuning,
                                std::optional<double> sigma_star_sq) {
  tuning.validate();
  const Index N = h.size();
  if (tuning.n_lambda_tilde && (*tuning.n_lambda_tilde > N || *tuning.n_lambda_tilde < 4))
    fail(ErrorCode::kInvalidArgument, "nLambdaTilde out of range");

  const OrderedView view = order_view(h);
  const auto s1 = prefix_sums(view.values);
  const auto s2 = prefix_sq_sums(view.values);

  std::vector<Index> grid;
  if (tuning.n_lambda_tilde)
    grid.push_back(*tuning.n_lambda_tilde);
  else
    grid = default_n_grid(N, 0);

  SecondStepResult best;
  best.objective = std::numeric_limits<double>::infinity();
  for (Index n : grid) {
    const double lt =
        tuning.lambda_tilde
            ? *tuning.lambda_tilde
            : std::pow(static_cast<double>(n), tuning.epsilon - 1.0);
    const double mu = s1[static_cast<size_t>(n)] / static_cast<double>(n);
    const double sse =
        std::max(0.0, s2[static_cast<size_t>(n)] - static_cast<double>(n) * mu * mu);
    const double gamma = half_diff(s1, n);
    const double obj = sse / static_cast<double>(n) + lt * std::abs(gamma);
    if (obj < best.objective) {
      best.objective = obj;
      best.mu_upper = mu;
      best.n_selected = n;
      best.sigma_tilde_sq = n > 1 ? sse / static_cast<double>(n - 1) : 0.0;
    }
  }
  if (!std::isfinite(best.objective))
    fail(ErrorCode::kNTooSmall, "no feasible n for the second step");

  // Theorem-3.2-style plug-in variance
  double x_term = 0.0;
  const Index p = ds.n_cols();
  if (p > 0) {
    const MatrixXd A = ds.X.transpose() * ds.X / static_cast<double>(ds.n_rows());
    const VectorXd m = ds.X.colwise().mean();
    const auto ldlt = A.ldlt();
    const VectorXd Am = ldlt.solve(m);
    const double c = 1.0 - m.dot(Am);
    if (c < 1e-10)
      fail(ErrorCode::kRankDeficient,
           "X is collinear with the intercept; omega term undefined");
    const MatrixXd omega_inv =
        ldlt.solve(MatrixXd::Identity(p, p)) + (Am * Am.transpose()) / c;
    x_term = m.dot(omega_inv * m);
  }
  const double s_star = sigma_star_sq ? *sigma_star_sq : best.sigma_tilde_sq;
  best.var_mu_upper = best.sigma_tilde_sq + s_star * x_term;
  return best;
}

}  // namespace

FitResult pmls_first_step(const Dataset& ds, const TuningParams& tuning) {
  return first_step_core(ds, tuning, false);
}

FitResult pmls_improved(const Dataset& ds, const TuningParams& tuning) {
  return first_step_core(ds, tuning, true);
}

SecondStepResult pmls_second_step(const Dataset& ds, const VectorXd& beta,
                                  const TuningParams& tuning,
                                  std::optional<double> sigma_star_sq) {
  if (beta.size() != ds.n_cols())
    fail(ErrorCode::kInvalidArgument, "beta length disagrees with p");
  VectorXd h = ds.Y;
  if (beta.size() > 0) h -= ds.X * beta;
  return second_step_on(h, ds, tuning, sigma_star_sq);
}

SecondStepResult pmls_second_step_improved(const Dataset& ds,
                                           const VectorXd& beta_improved,
                                           const TuningParams& tuning,
                                           std::optional<double> sigma_star_sq) {
  return pmls_second_step(ds, beta_improved, tuning, sigma_star_sq);
}

SampleUpperResult upper_expectation_sample(const VectorXd& y,
                                           const TuningParams& tuning,
                                           bool signed_penalty) {
  tuning.validate();
  const Index N = y.size();
  if (N < 4) fail(ErrorCode::kNTooSmall, "need at least 4 observations");
  if (tuning.n_lambda && (*tuning.n_lambda > N || *tuning.n_lambda < 4))
    fail(ErrorCode::kInvalidArgument, "nLambda out of range");
  if (!y.allFinite()) fail(ErrorCode::kNonFinite, "non-finite observations");

  const OrderedView view = order_view(y);
  const auto s1 = prefix_sums(view.values);
  const auto s2 = prefix_sq_sums(view.values);

  std::vector<Index> grid;
  if (tuning.n_lambda)
    grid.push_back(*tuning.n_lambda);
  else
    grid = default_n_grid(N, 0);

  SampleUpperResult best;
  best.objective = std::numeric_limits<double>::infinity();
  for (Index n : grid) {
    const double lambda =
        tuning.lambda ? *tuning.lambda
                      : std::pow(static_cast<double>(n), tuning.epsilon - 1.0);
    const double mu = s1[static_cast<size_t>(n)] / static_cast<double>(n);
    const double sse =
        std::max(0.0, s2[static_cast<size_t>(n)] - static_cast<double>(n) * mu * mu);
    const double delta = half_diff(s1, n);
    const double pen = signed_penalty ? delta : std::abs(delta);
    const double obj = sse / static_cast<double>(n) + lambda * pen;
    if (obj < best.objective) {
      best.objective = obj;
      best.mu_upper = mu;
      best.n_selected = n;
    }
  }
  return best;
}

SampleUpperResult lower_expectation_sample(const VectorXd& y,
                                           const TuningParams& tuning,
                                           bool signed_penalty) {
  SampleUpperResult r = upper_expectation_sample(-y, tuning, signed_penalty);
  r.mu_upper = -r.mu_upper;
  return r;
}

SecondStepResult lower_expectation_regression(const Dataset& ds,
                                              const VectorXd& beta,
                                              const TuningParams& tuning,
                                              std::optional<double> sigma_star_sq) {
  if (beta.size() != ds.n_cols())
    fail(ErrorCode::kInvalidArgument, "beta length disagrees with p");
  VectorXd h = ds.Y;
  if (beta.size() > 0) h -= ds.X * beta;
  SecondStepResult r = second_step_on(-h, ds, tuning, sigma_star_sq);
  r.mu_upper = -r.mu_upper;
  return r;
}

}  // namespace pmls
