#include <doctest.h>

#include <random>
#include <sstream>

#include "pmls/csv.hpp"
#include "pmls/serialize.hpp"

using namespace pmls;

namespace {

FitResult random_fit(unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> normal;
  FitResult fit;
  fit.beta.resize(3);
  for (int i = 0; i < 3; ++i) fit.beta(i) = normal(gen) * 1e3;
  fit.mu_star = normal(gen) / 7.0;
  fit.mu_upper = normal(gen) * 1e-8;
  fit.mu_lower = normal(gen);
  fit.n_selected = 42;
  fit.n_selected_second = 17;
  fit.residuals.resize(5);
  for (int i = 0; i < 5; ++i) fit.residuals(i) = normal(gen);
  fit.cov_beta_mu = MatrixXd::Random(4, 4);
  fit.var_mu_upper = std::abs(normal(gen));
  fit.beta_ls.resize(3);
  for (int i = 0; i < 3; ++i) fit.beta_ls(i) = normal(gen);
  fit.intercept_ls = normal(gen);
  fit.diagnostics["objective"] = normal(gen);
  fit.diagnostics["lambda"] = 1.0 / 3.0;
  return fit;
}

}  // namespace

TEST_CASE("fit records round-trip bit for bit") {
  for (unsigned seed = 0; seed < 20; ++seed) {
    const FitResult fit = random_fit(seed);
    std::ostringstream os;
    to_record(fit).write(os);
    std::istringstream is(os.str());
    const auto records = read_records(is);
    REQUIRE(records.size() == 1);
    const FitResult back = fit_result_from(records[0]);
    CHECK((back.beta - fit.beta).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(back.mu_star == fit.mu_star);
    CHECK(*back.mu_upper == *fit.mu_upper);
    CHECK(*back.mu_lower == *fit.mu_lower);
    CHECK(back.n_selected == fit.n_selected);
    CHECK((back.residuals - fit.residuals).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((back.cov_beta_mu - fit.cov_beta_mu).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(*back.var_mu_upper == *fit.var_mu_upper);
    CHECK(back.intercept_ls == fit.intercept_ls);
    CHECK(back.diagnostics.at("lambda") == fit.diagnostics.at("lambda"));
  }
}

TEST_CASE("record streams skip comments and reject malformed input") {
  std::istringstream ok("# comment\nrecord a\nint x 3\nend\nrecord b\nend\n");
  const auto records = read_records(ok);
  CHECK(records.size() == 2);
  CHECK(records[0].get_int("x") == 3);

  std::istringstream bad("record a\nint x 3\n");
  CHECK_THROWS_AS(read_records(bad), Error);
}

TEST_CASE("generic CSV: last column is the response") {
  const std::string text = "a,b,y\n1,2,3\n4,5,6\n0,1,0\n2,2,2\n";
  const Dataset ds = parse_csv_text(text, CsvSchema::kGeneric);
  CHECK(ds.n_rows() == 4);
  CHECK(ds.n_cols() == 2);
  CHECK(ds.Y(1) == 6.0);
  CHECK(ds.X(1, 0) == 4.0);
}

TEST_CASE("generic CSV reports the offending cell") {
  const std::string text = "a,y\n1,2\n3,oops\n4,5\n5,6\n";
  try {
    parse_csv_text(text, CsvSchema::kGeneric);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnparseableCell);
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    CHECK(std::string(e.what()).find("column 2") != std::string::npos);
  }
}

TEST_CASE("bank schema encodes dummies with the top reference levels") {
  const std::string header =
      "Employee,EduLev,JobGrade,YrHired,YrBorn,Gender,YrsPrior,PCJob,Salary\n";
  std::string text = header;
  // reference categories: EduLev 5, JobGrade 6 -> all dummies zero
  text += "1,5,6,90,60,Male,0,0,100\n";
  text += "2,1,1,85,55,Female,2,1,30\n";
  text += "3,3,2,88,58,Male,1,0,40\n";
  text += "4,2,4,92,62,Female,0,0,55\n";
  text += "5,4,5,95,65,Male,3,1,70\n";
  text += "6,1,2,91,61,Female,1,0,35\n";
  text += "7,2,3,89,59,Male,0,0,45\n";
  text += "8,3,1,86,56,Female,4,1,28\n";
  text += "9,4,3,93,63,Male,2,0,52\n";
  text += "10,1,5,94,64,Female,1,1,66\n";
  text += "11,2,2,87,57,Male,0,0,38\n";
  text += "12,3,4,96,66,Female,2,1,58\n";
  text += "13,5,1,84,54,Male,1,0,31\n";
  const Dataset ds = parse_csv_text(text, CsvSchema::kBankSalary);
  CHECK(ds.n_cols() == 11);
  CHECK(ds.n_rows() == 13);
  // row 0: all dummies zero, Male
  for (Index j = 0; j < 11; ++j) CHECK(ds.X(0, j) == 0.0);
  CHECK(ds.Y(0) == 100.0);
  // row 1: Female=1, PCJob=1, Edu1=1, JobGrd1=1
  CHECK(ds.X(1, 0) == 1.0);
  CHECK(ds.X(1, 1) == 1.0);
  CHECK(ds.X(1, 2) == 1.0);
  CHECK(ds.X(1, 6) == 1.0);
  CHECK(ds.X(1, 3) + ds.X(1, 4) + ds.X(1, 5) == 0.0);
}

TEST_CASE("bank schema rejects missing columns and bad categories") {
  try {
    parse_csv_text("EduLev,JobGrade,Gender,PCJob\n1,1,Male,0\n",
                   CsvSchema::kBankSalary);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSchemaMismatch);
  }
  try {
    parse_csv_text(
        "EduLev,JobGrade,Gender,PCJob,Salary\n7,1,Male,0,10\n1,1,Male,0,11\n"
        "2,2,Female,1,12\n3,3,Male,0,13\n",
        CsvSchema::kBankSalary);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSchemaMismatch);
  }
}

TEST_CASE("format_double survives the round trip") {
  for (double v : {1.0 / 3.0, 1e-300, 123456789.123456789, -0.0, 2.5e17}) {
    const std::string s = format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
}
