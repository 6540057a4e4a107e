#include "pmls/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "pmls/estimators.hpp"

namespace pmls {

ExperimentId experiment_from(const std::string& name) {
  if (name == "E1a" || name == "e1a") return ExperimentId::kE1a;
  if (name == "E1b" || name == "e1b") return ExperimentId::kE1b;
  if (name == "E2" || name == "e2") return ExperimentId::kE2;
  if (name == "E3" || name == "e3") return ExperimentId::kE3;
  if (name == "E4" || name == "e4") return ExperimentId::kE4;
  if (name == "custom") return ExperimentId::kCustom;
  fail(ErrorCode::kInvalidArgument, "unknown experiment: " + name);
}

const char* to_string(ExperimentId id) {
  switch (id) {
    case ExperimentId::kE1a: return "E1a";
    case ExperimentId::kE1b: return "E1b";
    case ExperimentId::kE2: return "E2";
    case ExperimentId::kE3: return "E3";
    case ExperimentId::kE4: return "E4";
    case ExperimentId::kCustom: return "custom";
  }
  return "custom";
}

Pipeline pipeline_from(const std::string& name) {
  if (name == "olsOnly" || name == "ols") return Pipeline::kOlsOnly;
  if (name == "pmlsFull" || name == "pmls") return Pipeline::kPmlsFull;
  if (name == "improved") return Pipeline::kImproved;
  if (name == "betaZero") return Pipeline::kBetaZero;
  fail(ErrorCode::kInvalidArgument, "unknown pipeline: " + name);
}

const char* to_string(Pipeline p) {
  switch (p) {
    case Pipeline::kOlsOnly: return "olsOnly";
    case Pipeline::kPmlsFull: return "pmlsFull";
    case Pipeline::kImproved: return "improved";
    case Pipeline::kBetaZero: return "betaZero";
  }
  return "olsOnly";
}

ExperimentConfig ExperimentConfig::builtin(ExperimentId id, Index n, Index reps,
                                           uint64_t seed) {
  ExperimentConfig c;
  c.experiment = id;
  c.n = n;
  c.reps = reps;
  c.seed = seed;

  std::vector<ScenarioComponent> comps;
  switch (id) {
    case ExperimentId::kE1a:
      // means k/2 paired with both variances, listed means ascending
      for (int k = 1; k <= 10; ++k)
        for (double var : {0.20 * 0.20, 0.25 * 0.25})
          comps.push_back({0.5 * k, var});
      c.beta_true.resize(0);
      break;
    case ExperimentId::kE1b:
      for (int k = 1; k <= 10; ++k) comps.push_back({double(k), 0.25 * 0.25});
      c.beta_true.resize(0);
      break;
    case ExperimentId::kE2:
      for (int k = 1; k <= 10; ++k)
        comps.push_back({double(k), (0.05 * k) * (0.05 * k)});
      c.beta_true.resize(1);
      c.beta_true << 2.0;
      c.x_distribution = {{1.0, 1.0}};
      break;
    case ExperimentId::kE3:
    case ExperimentId::kE4:
      for (int k = 1; k <= 10; ++k)
        comps.push_back({double(k), (0.05 * k) * (0.05 * k)});
      c.beta_true.resize(2);
      c.beta_true << 3.0, 2.0;
      c.x_distribution = {{1.0, 1.0}, {2.0, 1.0}};
      if (id == ExperimentId::kE4) c.test_size = 100;
      break;
    case ExperimentId::kCustom:
      fail(ErrorCode::kInvalidArgument, "custom configs are built by the caller");
  }
  c.scenario = UncertainScenario::uniform(std::move(comps));
  return c;
}

namespace {

Dataset generate_with(const ExperimentConfig& config, Index n_rows,
                      Philox4x32& rng) {
  config.scenario.validate();
  const Index p = config.beta_true.size();
  if (static_cast<Index>(config.x_distribution.size()) != p)
    fail(ErrorCode::kInvalidArgument,
         "x distribution count disagrees with beta length");
  const Index L = static_cast<Index>(config.scenario.components.size());

  // exactly floor(N/L) rows per component, remainder to the last components
  std::vector<int> labels;
  labels.reserve(static_cast<size_t>(n_rows));
  const Index base = n_rows / L;
  const Index rem = n_rows % L;
  for (Index t = 0; t < L; ++t) {
    const Index count = base + (t >= L - rem ? 1 : 0);
    for (Index i = 0; i < count; ++i) labels.push_back(static_cast<int>(t));
  }
  shuffle_inplace(labels, rng);

  MatrixXd X(n_rows, p);
  VectorXd Y(n_rows);
  for (Index i = 0; i < n_rows; ++i) {
    double mean_part = 0.0;
    for (Index j = 0; j < p; ++j) {
      const auto& spec = config.x_distribution[static_cast<size_t>(j)];
      X(i, j) = spec.mean + std::sqrt(spec.variance) * standard_normal(rng);
      mean_part += config.beta_true(j) * X(i, j);
    }
    const auto& comp =
        config.scenario.components[static_cast<size_t>(labels[static_cast<size_t>(i)])];
    const double eps = comp.mean + std::sqrt(comp.variance) * standard_normal(rng);
    Y(i) = mean_part + eps;
  }

  Dataset ds;
  ds.X = std::move(X);
  ds.Y = std::move(Y);
  ds.labels = std::move(labels);
  return ds;
}

CvGrid grid_for(const ExperimentConfig& config, const Dataset& ds, uint64_t rep) {
  CvGrid grid = CvGrid::defaults(ds.n_rows(), ds.n_cols(), config.seed + rep);
  if (!config.lambda_grid.empty()) grid.lambda_grid = config.lambda_grid;
  if (!config.n_grid.empty()) grid.n_grid = config.n_grid;
  grid.folds = config.cv_folds;
  return grid;
}

}  // namespace

Dataset generate(const ExperimentConfig& config, uint64_t rep) {
  Philox4x32 rng(config.seed, rep);
  return generate_with(config, config.n, rng);
}

FitResult fit_pipeline(const Dataset& ds, Pipeline pipeline,
                       const ExperimentConfig& config) {
  return fit_pipeline_seeded(ds, pipeline, config, 0);
}

FitResult fit_pipeline_seeded(const Dataset& ds, Pipeline pipeline,
                              const ExperimentConfig& config, uint64_t rep) {
  FitResult fit;
  switch (pipeline) {
    case Pipeline::kOlsOnly: {
      const OlsFit ols = ols_fit(ds, config.ols_center);
      fit.beta = ols.beta;
      fit.beta_ls = ols.beta;
      fit.intercept_ls = ols.intercept;
      fit.mu_star = ols.intercept;
      if (ds.n_cols() == 0) {
        // beta = 0 comparator: the overall average
        fit.mu_star = ds.Y.mean();
        fit.mu_upper = fit.mu_star;
      }
      fit.n_selected = ds.n_rows();
      fit.residuals = ols.residuals;
      fit.cov_beta_mu.resize(0, 0);
      return fit;
    }
    case Pipeline::kBetaZero: {
      const CvGrid grid = grid_for(config, ds, rep);
      const TuningParams theta = cv_select_theta_sample(ds.Y, grid);
      TuningParams t;
      t.epsilon = config.tuning.epsilon;
      t.lambda = config.tuning.lambda ? config.tuning.lambda : theta.lambda_tilde;
      t.n_lambda =
          config.tuning.n_lambda ? config.tuning.n_lambda : theta.n_lambda_tilde;
      const SampleUpperResult up =
          upper_expectation_sample(ds.Y, t, config.sample_penalty_signed);

      const TuningParams theta_lo = cv_select_theta_sample(-ds.Y, grid);
      TuningParams tl;
      tl.epsilon = config.tuning.epsilon;
      tl.lambda = theta_lo.lambda_tilde;
      tl.n_lambda = theta_lo.n_lambda_tilde;
      const SampleUpperResult low = lower_expectation_sample(ds.Y, tl);

      // the beta = 0 model still predicts on covariate rows
      fit.beta = VectorXd::Zero(ds.n_cols());
      fit.beta_ls = VectorXd::Zero(ds.n_cols());
      fit.intercept_ls = ds.Y.mean();
      fit.mu_star = up.mu_upper;
      fit.mu_upper = up.mu_upper;
      fit.mu_lower = low.mu_upper;
      fit.n_selected = up.n_selected;
      fit.n_selected_second = up.n_selected;
      fit.residuals = ds.Y - predict(fit, ds.X, PredictionMode::kMax);
      fit.diagnostics["objective"] = up.objective;
      fit.cov_beta_mu.resize(0, 0);
      return fit;
    }
    case Pipeline::kPmlsFull:
    case Pipeline::kImproved: {
      const bool improved = pipeline == Pipeline::kImproved;
      const CvGrid grid = grid_for(config, ds, rep);
      TuningParams theta = improved ? cv_select_theta_improved(ds, grid)
                                    : cv_select_theta(ds, grid);
      theta.epsilon = config.tuning.epsilon;
      if (config.tuning.lambda) theta.lambda = config.tuning.lambda;
      if (config.tuning.n_lambda) theta.n_lambda = config.tuning.n_lambda;
      if (config.tuning.lambda1) theta.lambda1 = config.tuning.lambda1;
      fit = improved ? pmls_improved(ds, theta) : pmls_first_step(ds, theta);

      TuningParams tilde = cv_select_theta_tilde(ds, fit.beta, grid);
      if (config.tuning.lambda_tilde) tilde.lambda_tilde = config.tuning.lambda_tilde;
      if (config.tuning.n_lambda_tilde)
        tilde.n_lambda_tilde = config.tuning.n_lambda_tilde;
      tilde.epsilon = config.tuning.epsilon;
      const double sigma_star_sq = fit.diagnostics.at("sigma_star_sq");
      const SecondStepResult second =
          pmls_second_step(ds, fit.beta, tilde, sigma_star_sq);
      fit.mu_upper = second.mu_upper;
      fit.n_selected_second = second.n_selected;
      fit.var_mu_upper = second.var_mu_upper;
      fit.diagnostics["sigma_tilde_sq"] = second.sigma_tilde_sq;

      // lower-expectation mirror for the prediction band
      VectorXd h = ds.Y;
      if (fit.beta.size() > 0) h -= ds.X * fit.beta;
      const TuningParams tilde_lo = cv_select_theta_sample(-h, grid);
      TuningParams tl;
      tl.lambda_tilde = tilde_lo.lambda_tilde;
      tl.n_lambda_tilde = tilde_lo.n_lambda_tilde;
      tl.epsilon = config.tuning.epsilon;
      const SecondStepResult lower =
          lower_expectation_regression(ds, fit.beta, tl, sigma_star_sq);
      fit.mu_lower = lower.mu_upper;

      // residuals of the fitted upper-expectation model, computed through
      // the prediction path so fit -> predict round trips bit-exactly
      fit.residuals = ds.Y - predict(fit, ds.X, PredictionMode::kMax);
      return fit;
    }
  }
  fail(ErrorCode::kInvalidArgument, "unknown pipeline");
}

MetricReport run_replications(const ExperimentConfig& config, Pipeline pipeline) {
  if (config.reps < 1) fail(ErrorCode::kInvalidArgument, "reps must be >= 1");
  MetricReport report;
  report.rng_name = Philox4x32::name();
  report.seed = config.seed;
  report.reps = config.reps;

  const Index p = config.beta_true.size();
  std::map<std::string, std::vector<double>> estimates;
  std::map<std::string, double> truths;
  for (Index j = 0; j < p; ++j) {
    std::ostringstream name;
    name << "beta" << (j + 1);
    truths[name.str()] = config.beta_true(j);
  }
  config.scenario.validate();
  truths["muUpper"] = config.scenario.upper_expectation();
  truths["muLower"] = config.scenario.lower_expectation();

  std::vector<std::vector<double>> ape_curves[3];
  std::vector<std::vector<double>> r2_curves[3];
  Index below_count = 0, below_total = 0;

  for (Index rep = 0; rep < config.reps; ++rep) {
    Philox4x32 rng(config.seed, static_cast<uint64_t>(rep));
    Dataset train = generate_with(config, config.n, rng);
    try {
      const FitResult fit =
          fit_pipeline_seeded(train, pipeline, config, static_cast<uint64_t>(rep));
      for (Index j = 0; j < p; ++j) {
        std::ostringstream name;
        name << "beta" << (j + 1);
        estimates[name.str()].push_back(fit.beta(j));
      }
      if (fit.mu_upper) estimates["muUpper"].push_back(*fit.mu_upper);
      if (fit.mu_lower) estimates["muLower"].push_back(*fit.mu_lower);

      if (config.test_size > 0) {
        Dataset test = generate_with(config, config.test_size, rng);
        const PredictionMode modes[3] = {PredictionMode::kLs, PredictionMode::kMax,
                                         PredictionMode::kMid};
        std::vector<double> ape_m[3];
        for (int k = 0; k < 3; ++k) {
          if (pipeline == Pipeline::kOlsOnly &&
              (modes[k] == PredictionMode::kMax || modes[k] == PredictionMode::kMid))
            continue;  // no upper/lower estimates in the baseline
          const VectorXd y_hat = predict(fit, test.X, modes[k]);
          ape_m[k].resize(static_cast<size_t>(config.test_size));
          std::vector<double> r2_m;
          for (Index m = 1; m <= config.test_size; ++m)
            ape_m[k][static_cast<size_t>(m - 1)] = ape_top_m(test.Y, y_hat, m);
          for (Index m = 2; m <= config.test_size; ++m)
            r2_m.push_back(r2_top_m(test.Y, y_hat, m));
          ape_curves[k].push_back(ape_m[k]);
          r2_curves[k].push_back(std::move(r2_m));
        }
        if (!ape_m[0].empty() && !ape_m[1].empty()) {
          // cumulative comparison at the prefix boundary: APE(m) already
          // averages the errors of the m largest observations
          const Index cutoff =
              std::max<Index>(1, static_cast<Index>(0.3 * config.test_size));
          below_total++;
          if (ape_m[1][static_cast<size_t>(cutoff - 1)] <
              ape_m[0][static_cast<size_t>(cutoff - 1)])
            below_count++;
        }
      }
    } catch (const Error& err) {
      report.failures++;
      std::ostringstream os;
      os << "rep " << rep << ": " << to_string(err.code()) << ": " << err.what();
      report.failure_messages.push_back(os.str());
    }
  }

  for (const auto& [name, values] : estimates) {
    if (values.empty()) continue;
    ParamSummary s;
    s.truth = truths.count(name) ? truths[name] : 0.0;
    double bias = 0.0, mse = 0.0;
    for (double v : values) {
      bias += v - s.truth;
      mse += (v - s.truth) * (v - s.truth);
    }
    s.bias = bias / static_cast<double>(values.size());
    s.mse = mse / static_cast<double>(values.size());
    s.summary = five_number_summary(values);
    s.count = static_cast<Index>(values.size());
    report.per_parameter[name] = s;
  }

  const char* mode_names[3] = {"ls", "max", "mid"};
  for (int k = 0; k < 3; ++k) {
    if (ape_curves[k].empty()) continue;
    PredictionSummary ps;
    const size_t n_m = ape_curves[k].front().size();
    for (size_t m = 0; m < n_m; ++m) {
      std::vector<double> at_m;
      for (const auto& curve : ape_curves[k]) at_m.push_back(curve[m]);
      ps.ape_curve.push_back(median_of(std::move(at_m)));
    }
    ps.ape_all = ps.ape_curve.back();
    if (!r2_curves[k].empty()) {
      const size_t n_r = r2_curves[k].front().size();
      for (size_t m = 0; m < n_r; ++m) {
        std::vector<double> at_m;
        for (const auto& curve : r2_curves[k]) at_m.push_back(curve[m]);
        ps.r2_curve.push_back(median_of(std::move(at_m)));
      }
    }
    report.predictions[mode_names[k]] = ps;
  }
  if (below_total > 0)
    report.max_below_ls_fraction =
        static_cast<double>(below_count) / static_cast<double>(below_total);
  return report;
}

OrderDiagnostic order_statistic_diagnostic(Index n, Index m, Index trials,
                                           uint64_t seed) {
  if (n < 1 || m < 1 || m > n)
    fail(ErrorCode::kInvalidArgument, "need 1 <= m <= n");
  OrderDiagnostic d;
  d.trials = trials;
  const double nd = static_cast<double>(n);
  d.p = 0.75 - 1.0 / (nd + 1.0) +
        1.0 / ((nd + 1.0) * std::pow(4.0, nd + 1.0));

  // exact binomial tail in log space
  const double logp = std::log(d.p);
  const double logq = std::log1p(-d.p);
  double tail = 0.0;
  for (Index k = m; k <= n; ++k) {
    const double kd = static_cast<double>(k);
    const double log_term = std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) -
                            std::lgamma(nd - kd + 1.0) + kd * logp +
                            (nd - kd) * logq;
    tail += std::exp(log_term);
  }
  d.tail_bound = std::min(tail, 1.0);

  // Stirling envelope of the same sum: (n-m) n^n / (m^m (n-m)^(n-m)) 3^m / 4^n
  if (m < n) {
    const double md = static_cast<double>(m);
    const double log_env = std::log(nd - md) + nd * std::log(nd) -
                           md * std::log(md) -
                           (nd - md) * std::log(nd - md) + md * std::log(3.0) -
                           nd * std::log(4.0);
    d.asymptotic_bound = std::exp(log_env);
  } else {
    d.asymptotic_bound = std::pow(3.0 / 4.0, nd);
  }

  // Monte-Carlo estimate of P(at least m of the Z* fall below max Z)
  Philox4x32 rng(seed, 0x32376d63ULL);
  Index hits = 0;
  for (Index t = 0; t < trials; ++t) {
    double zmax = -1.0;
    for (Index i = 0; i < n; ++i)
      zmax = std::max(zmax, -1.0 + 4.0 * uniform_double(rng));
    Index count = 0;
    for (Index i = 0; i < n; ++i)
      if (4.0 * uniform_double(rng) <= zmax) ++count;
    if (count >= m) ++hits;
  }
  d.monte_carlo = static_cast<double>(hits) / static_cast<double>(trials);
  d.mc_std_error = std::sqrt(std::max(d.monte_carlo * (1.0 - d.monte_carlo),
                                      1.0 / static_cast<double>(trials)) /
                             static_cast<double>(trials));
  return d;
}

}  // namespace pmls
