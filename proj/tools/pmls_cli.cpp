// Command-line front end: simulation harness, CSV fitting, prediction and the
// order-statistic diagnostic. All outputs are line-oriented record streams
// with the resolved configuration embedded for reproducibility.

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "pmls/csv.hpp"
#include "pmls/estimators.hpp"
#include "pmls/evaluation.hpp"
#include "pmls/serialize.hpp"
#include "pmls/simulation.hpp"
#include "pmls/tuning.hpp"

namespace {

using namespace pmls;

struct CommonOpts {
  std::optional<double> lambda;
  std::optional<int64_t> n_lambda;
  std::optional<double> lambda_tilde;
  std::optional<int64_t> n_lambda_tilde;
  std::optional<double> lambda1;
  double epsilon = 0.5;
  uint64_t seed = 0;
  int folds = 5;
  std::string out;
};

TuningParams tuning_from(const CommonOpts& o) {
  TuningParams t;
  t.lambda = o.lambda;
  if (o.n_lambda) t.n_lambda = static_cast<Index>(*o.n_lambda);
  t.lambda_tilde = o.lambda_tilde;
  if (o.n_lambda_tilde) t.n_lambda_tilde = static_cast<Index>(*o.n_lambda_tilde);
  t.lambda1 = o.lambda1;
  t.epsilon = o.epsilon;
  return t;
}

void add_tuning_flags(CLI::App* cmd, CommonOpts* o) {
  cmd->add_option("--lambda", o->lambda, "first-step penalty weight");
  cmd->add_option("--n-lambda", o->n_lambda, "fixed first-step n");
  cmd->add_option("--lambda-tilde", o->lambda_tilde, "second-step penalty weight");
  cmd->add_option("--n-lambda-tilde", o->n_lambda_tilde, "fixed second-step n");
  cmd->add_option("--lambda1", o->lambda1, "first-moment penalty weight");
  cmd->add_option("--epsilon", o->epsilon, "exponent for auto lambda = n^(eps-1)")
      ->check(CLI::Range(1e-9, 1.0 - 1e-9));
  cmd->add_option("--seed", o->seed, "random seed");
  cmd->add_option("--folds", o->folds, "cross-validation folds")->check(CLI::Range(2, 100));
  cmd->add_option("--out", o->out, "output file (stdout when omitted)");
}

void emit(const CommonOpts& o, const std::vector<Record>& records) {
  if (o.out.empty()) {
    for (const auto& r : records) r.write(std::cout);
  } else {
    write_records_file(o.out, records);
  }
}

Record base_config_record(const std::string& command, const CommonOpts& o) {
  Record rec("run_config");
  rec.set_string("command", command);
  rec.set_string("rng", Philox4x32::name());
  rec.set_int("seed", static_cast<int64_t>(o.seed));
  rec.set_int("folds", o.folds);
  rec.set_scalar("epsilon", o.epsilon);
  if (o.lambda) rec.set_scalar("lambda", *o.lambda);
  if (o.n_lambda) rec.set_int("n_lambda", *o.n_lambda);
  if (o.lambda_tilde) rec.set_scalar("lambda_tilde", *o.lambda_tilde);
  if (o.n_lambda_tilde) rec.set_int("n_lambda_tilde", *o.n_lambda_tilde);
  if (o.lambda1) rec.set_scalar("lambda1", *o.lambda1);
  return rec;
}

int run_simulate(const CommonOpts& o, const std::string& experiment,
                 int64_t n, int64_t reps, const std::string& pipeline,
                 const std::string& ols_center, bool penalty_signed) {
  ExperimentConfig config =
      ExperimentConfig::builtin(experiment_from(experiment), n, reps, o.seed);
  config.tuning = tuning_from(o);
  config.cv_folds = o.folds;
  config.sample_penalty_signed = penalty_signed;
  if (ols_center == "y")
    config.ols_center = CenterMode::kYOnly;
  else if (ols_center == "both")
    config.ols_center = CenterMode::kBoth;

  const MetricReport report = run_replications(config, pipeline_from(pipeline));

  Record cfg = base_config_record("simulate", o);
  cfg.set_string("experiment", experiment);
  cfg.set_int("n", n);
  cfg.set_int("reps", reps);
  cfg.set_string("pipeline", pipeline);
  cfg.set_string("ols_center", ols_center);
  emit(o, {cfg, to_record(report)});
  return 0;
}

Dataset load_input(const std::string& path, const std::string& schema) {
  return ingest_csv(path, schema_from(schema));
}

int run_fit(const CommonOpts& o, const std::string& input,
            const std::string& schema, const std::string& pipeline,
            const std::string& split, bool split_random,
            const std::string& center) {
  Dataset full = load_input(input, schema);

  Index n_train = full.n_rows();
  Index n_test = 0;
  if (!split.empty()) {
    std::istringstream ss(split);
    char comma = 0;
    if (!(ss >> n_train >> comma >> n_test) || comma != ',' ||
        n_train + n_test != full.n_rows())
      fail(ErrorCode::kInvalidArgument,
           "--split must be train,test summing to the row count");
  }
  std::vector<Index> order(static_cast<size_t>(full.n_rows()));
  for (Index i = 0; i < full.n_rows(); ++i) order[static_cast<size_t>(i)] = i;
  if (split_random) {
    Philox4x32 rng(o.seed, 0x73706c69ULL);
    shuffle_inplace(order, rng);
  }
  std::vector<Index> train_idx(order.begin(), order.begin() + n_train);
  std::vector<Index> test_idx(order.begin() + n_train, order.end());
  Dataset train = full.rows(train_idx);

  ExperimentConfig config;
  config.seed = o.seed;
  config.cv_folds = o.folds;
  config.tuning = tuning_from(o);
  if (center == "none")
    config.ols_center = CenterMode::kNone;
  else if (center == "y")
    config.ols_center = CenterMode::kYOnly;
  else
    config.ols_center = CenterMode::kBoth;

  const FitResult fit = fit_pipeline(train, pipeline_from(pipeline), config);

  Record cfg = base_config_record("fit", o);
  cfg.set_string("input", input);
  cfg.set_string("schema", schema);
  cfg.set_string("pipeline", pipeline);
  cfg.set_string("center", center);
  cfg.set_int("n_train", n_train);
  cfg.set_int("n_test", n_test);
  cfg.set_int("split_random", split_random ? 1 : 0);

  std::vector<Record> records{cfg, to_record(fit)};

  if (n_test > 0) {
    Dataset test = full.rows(test_idx);
    Record pred("holdout_metrics");
    const bool has_upper = fit.mu_upper.has_value();
    for (const char* mode_name : {"ls", "max", "mid"}) {
      const PredictionMode mode = prediction_mode_from(mode_name);
      if (mode != PredictionMode::kLs && !has_upper) continue;
      if (mode == PredictionMode::kMid && !fit.mu_lower) continue;
      const VectorXd y_hat = predict(fit, test.X, mode);
      pred.set_scalar(std::string("ape_all.") + mode_name,
                      ape_top_m(test.Y, y_hat, test.Y.size()));
      std::vector<double> curve;
      for (Index m = 1; m <= test.Y.size(); ++m)
        curve.push_back(ape_top_m(test.Y, y_hat, m));
      pred.set_vector(std::string("ape_curve.") + mode_name, curve);
      std::vector<double> r2;
      for (Index m = 2; m <= test.Y.size(); ++m)
        r2.push_back(r2_top_m(test.Y, y_hat, m));
      pred.set_vector(std::string("r2_curve.") + mode_name, r2);
    }
    records.push_back(pred);
  }
  emit(o, records);
  return 0;
}

int run_predict(const CommonOpts& o, const std::string& fit_path,
                const std::string& input, const std::string& schema,
                const std::string& mode_name, bool independent_pairing) {
  const auto records = read_records_file(fit_path);
  const Record* fit_rec = nullptr;
  for (const auto& r : records)
    if (r.name() == "fit_result") fit_rec = &r;
  if (!fit_rec) fail(ErrorCode::kIoError, "no fit_result record in " + fit_path);
  const FitResult fit = fit_result_from(*fit_rec);

  Dataset data = load_input(input, schema);
  const PredictionMode mode = prediction_mode_from(mode_name);
  const VectorXd y_hat = predict(fit, data.X, mode);

  Record cfg = base_config_record("predict", o);
  cfg.set_string("fit", fit_path);
  cfg.set_string("input", input);
  cfg.set_string("schema", schema);
  cfg.set_string("mode", mode_name);
  cfg.set_int("ape_pairing_independent", independent_pairing ? 1 : 0);

  Record pred("predictions");
  pred.set_vector("y_hat", y_hat);
  pred.set_vector("residuals", data.Y - y_hat);
  pred.set_scalar("ape_all",
                  ape_top_m(data.Y, y_hat, data.Y.size(), independent_pairing));
  emit(o, {cfg, pred});
  return 0;
}

int run_diagnose(const CommonOpts& o, std::vector<int64_t> ns,
                 std::optional<int64_t> m_opt, int64_t trials,
                 const std::string& input, const std::string& schema) {
  Record cfg = base_config_record("diagnose", o);
  cfg.set_ints("n", ns);
  cfg.set_int("trials", trials);
  std::vector<Record> records{cfg};
  for (int64_t n : ns) {
    const Index m = m_opt ? static_cast<Index>(*m_opt)
                          : static_cast<Index>(std::ceil(
                                std::pow(static_cast<double>(n), 0.8)));
    const OrderDiagnostic d = order_statistic_diagnostic(
        static_cast<Index>(n), m, static_cast<Index>(trials), o.seed);
    Record rec("order_diagnostic");
    rec.set_int("n", n);
    rec.set_int("m", m);
    rec.set_scalar("p", d.p);
    rec.set_scalar("tail_bound", d.tail_bound);
    rec.set_scalar("asymptotic_bound", d.asymptotic_bound);
    rec.set_scalar("monte_carlo", d.monte_carlo);
    rec.set_scalar("mc_std_error", d.mc_std_error);
    records.push_back(rec);
  }
  if (!input.empty()) {
    Dataset ds = load_input(input, schema);
    const OlsFit ols = ols_fit(ds);
    std::vector<double> sq(static_cast<size_t>(ols.residuals.size()));
    for (Index i = 0; i < ols.residuals.size(); ++i)
      sq[static_cast<size_t>(i)] = ols.residuals(i) * ols.residuals(i);
    Record rec("asymmetry_check");
    const double skew = sample_skewness(sq);
    rec.set_scalar("skewness_sq_residuals", skew);
    rec.set_int("warning", std::abs(skew) < 0.1 ? 1 : 0);
    records.push_back(rec);
  }
  emit(o, records);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"penalized maximum least squares estimation under distribution "
               "uncertainty"};
  app.require_subcommand(1);

  CommonOpts sim_opts, fit_opts, pred_opts, diag_opts;

  auto* sim = app.add_subcommand("simulate", "run a replication study");
  std::string experiment = "E2";
  int64_t n = 500, reps = 1;
  std::string pipeline = "pmlsFull";
  std::string ols_center = "none";
  bool penalty_signed = true;
  sim->add_option("--experiment", experiment, "E1a E1b E2 E3 E4");
  sim->add_option("--n", n, "sample size per replication");
  sim->add_option("--reps", reps, "replication count");
  sim->add_option("--pipeline", pipeline, "olsOnly pmlsFull improved betaZero");
  sim->add_option("--ols-center", ols_center, "none y both")
      ->check(CLI::IsMember({"none", "y", "both"}));
  sim->add_flag("--penalty-signed,!--penalty-abs", penalty_signed,
                "signed (default) vs |Delta| penalty in the sample estimator");
  add_tuning_flags(sim, &sim_opts);

  auto* fit = app.add_subcommand("fit", "fit a CSV dataset");
  std::string input, schema = "generic", split, fit_pipeline_name = "pmlsFull";
  std::string center = "both";
  bool split_random = false;
  fit->add_option("--input", input, "CSV path")->required();
  fit->add_option("--schema", schema, "generic or bankSalary");
  fit->add_option("--pipeline", fit_pipeline_name, "olsOnly pmlsFull improved betaZero");
  fit->add_option("--split", split, "train,test row counts (file order)");
  fit->add_flag("--split-random", split_random, "seeded random split");
  fit->add_option("--center", center, "baseline centering: none y both")
      ->check(CLI::IsMember({"none", "y", "both"}));
  add_tuning_flags(fit, &fit_opts);

  auto* pred = app.add_subcommand("predict", "apply a saved fit");
  std::string fit_path, pred_input, pred_schema = "generic", mode = "max";
  std::string ape_pairing = "paired";
  pred->add_option("--fit", fit_path, "fit record file")->required();
  pred->add_option("--input", pred_input, "CSV path")->required();
  pred->add_option("--schema", pred_schema, "generic or bankSalary");
  pred->add_option("--mode", mode, "ls max mid")
      ->check(CLI::IsMember({"ls", "max", "mid"}));
  pred->add_option("--ape-pairing", ape_pairing, "paired or independent")
      ->check(CLI::IsMember({"paired", "independent"}));
  add_tuning_flags(pred, &pred_opts);

  auto* diag = app.add_subcommand("diagnose", "order-statistic diagnostic");
  std::vector<int64_t> diag_n{50};
  std::optional<int64_t> diag_m;
  int64_t trials = 100000;
  std::string diag_input, diag_schema = "generic";
  diag->add_option("--n", diag_n, "sample sizes");
  diag->add_option("--m", diag_m, "threshold count (default ceil(n^0.8))");
  diag->add_option("--trials", trials, "Monte-Carlo trials");
  diag->add_option("--input", diag_input, "optional CSV for the asymmetry check");
  diag->add_option("--schema", diag_schema, "generic or bankSalary");
  add_tuning_flags(diag, &diag_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed())
      return run_simulate(sim_opts, experiment, n, reps, pipeline, ols_center,
                          penalty_signed);
    if (fit->parsed())
      return run_fit(fit_opts, input, schema, fit_pipeline_name, split,
                     split_random, center);
    if (pred->parsed())
      return run_predict(pred_opts, fit_path, pred_input, pred_schema, mode,
                         ape_pairing == "independent");
    if (diag->parsed())
      return run_diagnose(diag_opts, diag_n, diag_m, trials, diag_input,
                          diag_schema);
  } catch (const pmls::Error& e) {
    pmls::Record rec("error");
    rec.set_string("code", pmls::to_string(e.code()));
    rec.set_int("exit", pmls::exit_code_for(e.code()));
    rec.write(std::cerr);
    std::cerr << "# " << e.what() << "\n";
    return pmls::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 2;
}
