#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pmls/csv.hpp"
#include "pmls/estimators.hpp"
#include "pmls/evaluation.hpp"
#include "pmls/simulation.hpp"
#include "pmls/tuning.hpp"

namespace py = pybind11;
using namespace pmls;

namespace {

Dataset make_dataset(const MatrixXd& X, const VectorXd& Y) {
  return validate_dataset(X, Y);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Penalized maximum least squares estimation for regression under "
            "distribution uncertainty";

  py::register_exception<Error>(m, "PmlsError");

  py::class_<Dataset>(m, "Dataset")
      .def(py::init(&make_dataset), py::arg("X"), py::arg("Y"))
      .def_readonly("X", &Dataset::X)
      .def_readonly("Y", &Dataset::Y)
      .def_readonly("labels", &Dataset::labels)
      .def_property_readonly("n_rows", &Dataset::n_rows)
      .def_property_readonly("n_cols", &Dataset::n_cols);

  py::class_<TuningParams>(m, "TuningParams")
      .def(py::init<>())
      .def_readwrite("lambda_", &TuningParams::lambda)
      .def_readwrite("n_lambda", &TuningParams::n_lambda)
      .def_readwrite("lambda_tilde", &TuningParams::lambda_tilde)
      .def_readwrite("n_lambda_tilde", &TuningParams::n_lambda_tilde)
      .def_readwrite("lambda1", &TuningParams::lambda1)
      .def_readwrite("epsilon", &TuningParams::epsilon);

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("beta", &FitResult::beta)
      .def_readonly("mu_star", &FitResult::mu_star)
      .def_readonly("mu_upper", &FitResult::mu_upper)
      .def_readonly("mu_lower", &FitResult::mu_lower)
      .def_readonly("n_selected", &FitResult::n_selected)
      .def_readonly("n_selected_second", &FitResult::n_selected_second)
      .def_readonly("residuals", &FitResult::residuals)
      .def_readonly("cov_beta_mu", &FitResult::cov_beta_mu)
      .def_readonly("var_mu_upper", &FitResult::var_mu_upper)
      .def_readonly("diagnostics", &FitResult::diagnostics)
      .def_readonly("beta_ls", &FitResult::beta_ls)
      .def_readonly("intercept_ls", &FitResult::intercept_ls);

  py::class_<SecondStepResult>(m, "SecondStepResult")
      .def_readonly("mu_upper", &SecondStepResult::mu_upper)
      .def_readonly("n_selected", &SecondStepResult::n_selected)
      .def_readonly("var_mu_upper", &SecondStepResult::var_mu_upper)
      .def_readonly("objective", &SecondStepResult::objective)
      .def_readonly("sigma_tilde_sq", &SecondStepResult::sigma_tilde_sq);

  py::class_<SampleUpperResult>(m, "SampleUpperResult")
      .def_readonly("mu_upper", &SampleUpperResult::mu_upper)
      .def_readonly("n_selected", &SampleUpperResult::n_selected)
      .def_readonly("objective", &SampleUpperResult::objective);

  py::enum_<CenterMode>(m, "CenterMode")
      .value("none", CenterMode::kNone)
      .value("y_only", CenterMode::kYOnly)
      .value("both", CenterMode::kBoth);

  py::class_<OlsFit>(m, "OlsFit")
      .def_readonly("beta", &OlsFit::beta)
      .def_readonly("residuals", &OlsFit::residuals)
      .def_readonly("intercept", &OlsFit::intercept);

  m.def("ols_fit", &ols_fit, py::arg("ds"), py::arg("center") = CenterMode::kNone);
  m.def("squared_quantities", &squared_quantities);
  m.def("pmls_first_step", &pmls_first_step, py::arg("ds"),
        py::arg("tuning") = TuningParams{});
  m.def("pmls_improved", &pmls_improved, py::arg("ds"),
        py::arg("tuning") = TuningParams{});
  m.def("pmls_second_step", &pmls_second_step, py::arg("ds"), py::arg("beta"),
        py::arg("tuning") = TuningParams{},
        py::arg("sigma_star_sq") = std::optional<double>{});
  m.def("upper_expectation_sample", &upper_expectation_sample, py::arg("y"),
        py::arg("tuning") = TuningParams{}, py::arg("signed_penalty") = true);
  m.def("lower_expectation_sample", &lower_expectation_sample, py::arg("y"),
        py::arg("tuning") = TuningParams{}, py::arg("signed_penalty") = true);
  m.def("lower_expectation_regression", &lower_expectation_regression,
        py::arg("ds"), py::arg("beta"), py::arg("tuning") = TuningParams{},
        py::arg("sigma_star_sq") = std::optional<double>{});

  py::class_<CvGrid>(m, "CvGrid")
      .def(py::init<>())
      .def_static("defaults", &CvGrid::defaults, py::arg("n_rows"),
                  py::arg("n_cols"), py::arg("seed"))
      .def_readwrite("lambda_grid", &CvGrid::lambda_grid)
      .def_readwrite("n_grid", &CvGrid::n_grid)
      .def_readwrite("folds", &CvGrid::folds)
      .def_readwrite("seed", &CvGrid::seed);

  m.def("cv_select_theta", [](const Dataset& ds, const CvGrid& grid) {
    return cv_select_theta(ds, grid);
  });
  m.def("cv_select_theta_tilde",
        [](const Dataset& ds, const VectorXd& beta, const CvGrid& grid) {
          return cv_select_theta_tilde(ds, beta, grid);
        });
  m.def("cv_select_theta_sample", [](const VectorXd& y, const CvGrid& grid) {
    return cv_select_theta_sample(y, grid);
  });

  py::enum_<ExperimentId>(m, "ExperimentId")
      .value("E1a", ExperimentId::kE1a)
      .value("E1b", ExperimentId::kE1b)
      .value("E2", ExperimentId::kE2)
      .value("E3", ExperimentId::kE3)
      .value("E4", ExperimentId::kE4)
      .value("custom", ExperimentId::kCustom);

  py::enum_<Pipeline>(m, "Pipeline")
      .value("ols_only", Pipeline::kOlsOnly)
      .value("pmls_full", Pipeline::kPmlsFull)
      .value("improved", Pipeline::kImproved)
      .value("beta_zero", Pipeline::kBetaZero);

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def_static("builtin", &ExperimentConfig::builtin, py::arg("id"),
                  py::arg("n"), py::arg("reps"), py::arg("seed"))
      .def_readwrite("n", &ExperimentConfig::n)
      .def_readwrite("reps", &ExperimentConfig::reps)
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_readwrite("beta_true", &ExperimentConfig::beta_true)
      .def_readwrite("test_size", &ExperimentConfig::test_size)
      .def_readwrite("ols_center", &ExperimentConfig::ols_center)
      .def_readwrite("cv_folds", &ExperimentConfig::cv_folds);

  py::class_<ParamSummary>(m, "ParamSummary")
      .def_readonly("truth", &ParamSummary::truth)
      .def_readonly("bias", &ParamSummary::bias)
      .def_readonly("mse", &ParamSummary::mse)
      .def_readonly("count", &ParamSummary::count);

  py::class_<PredictionSummary>(m, "PredictionSummary")
      .def_readonly("ape_curve", &PredictionSummary::ape_curve)
      .def_readonly("ape_all", &PredictionSummary::ape_all)
      .def_readonly("r2_curve", &PredictionSummary::r2_curve);

  py::class_<MetricReport>(m, "MetricReport")
      .def_readonly("per_parameter", &MetricReport::per_parameter)
      .def_readonly("predictions", &MetricReport::predictions)
      .def_readonly("reps", &MetricReport::reps)
      .def_readonly("failures", &MetricReport::failures)
      .def_readonly("rng_name", &MetricReport::rng_name)
      .def_readonly("max_below_ls_fraction", &MetricReport::max_below_ls_fraction);

  m.def("generate", &generate, py::arg("config"), py::arg("rep") = 0);
  m.def("run_replications", &run_replications, py::arg("config"),
        py::arg("pipeline"));
  m.def("fit_pipeline", &fit_pipeline, py::arg("ds"), py::arg("pipeline"),
        py::arg("config"));

  py::enum_<PredictionMode>(m, "PredictionMode")
      .value("ls", PredictionMode::kLs)
      .value("max", PredictionMode::kMax)
      .value("mid", PredictionMode::kMid);

  m.def("predict", &predict);
  m.def("ape_top_m", &ape_top_m, py::arg("y_test"), py::arg("y_hat"), py::arg("m"),
        py::arg("independent_pairing") = false);
  m.def("r2_top_m", &r2_top_m, py::arg("y_test"), py::arg("y_hat"), py::arg("m"),
        py::arg("independent_pairing") = false);

  py::class_<OrderDiagnostic>(m, "OrderDiagnostic")
      .def_readonly("p", &OrderDiagnostic::p)
      .def_readonly("tail_bound", &OrderDiagnostic::tail_bound)
      .def_readonly("asymptotic_bound", &OrderDiagnostic::asymptotic_bound)
      .def_readonly("monte_carlo", &OrderDiagnostic::monte_carlo)
      .def_readonly("mc_std_error", &OrderDiagnostic::mc_std_error);

  m.def("order_statistic_diagnostic", &order_statistic_diagnostic, py::arg("n"),
        py::arg("m"), py::arg("trials") = 100000, py::arg("seed") = 0);

  py::enum_<CsvSchema>(m, "CsvSchema")
      .value("generic", CsvSchema::kGeneric)
      .value("bank_salary", CsvSchema::kBankSalary);

  m.def("ingest_csv", &ingest_csv);
}
