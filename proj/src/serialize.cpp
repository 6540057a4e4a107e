#include "pmls/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace pmls {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void Record::set_int(const std::string& key, int64_t v) {
  if (!entries_.count(key)) order_.push_back(key);
  entries_[key] = {"int", {std::to_string(v)}};
}

void Record::set_scalar(const std::string& key, double v) {
  if (!entries_.count(key)) order_.push_back(key);
  entries_[key] = {"scalar", {format_double(v)}};
}

void Record::set_string(const std::string& key, const std::string& v) {
  if (v.find_first_of(" \t\n") != std::string::npos)
    fail(ErrorCode::kInvalidArgument, "string values must be single tokens");
  if (!entries_.count(key)) order_.push_back(key);
  entries_[key] = {"string", {v}};
}

void Record::set_vector(const std::string& key, const VectorXd& v) {
  Entry e;
  e.type = "vector";
  e.tokens.push_back(std::to_string(v.size()));
  for (Index i = 0; i < v.size(); ++i) e.tokens.push_back(format_double(v(i)));
  if (!entries_.count(key)) order_.push_back(key);
  entries_[key] = std::move(e);
}

void Record::set_vector(const std::string& key, const std::vector<double>& v) {
  Eigen::Map<const VectorXd> m(v.data(), static_cast<Index>(v.size()));
  set_vector(key, VectorXd(m));
}

void Record::set_ints(const std::string& key, const std::vector<int64_t>& v) {
  Entry e;
  e.type = "ints";
  e.tokens.push_back(std::to_string(v.size()));
  for (int64_t x : v) e.tokens.push_back(std::to_string(x));
  if (!entries_.count(key)) order_.push_back(key);
  entries_[key] = std::move(e);
}

void Record::set_matrix(const std::string& key, const MatrixXd& m) {
  Entry e;
  e.type = "matrix";
  e.tokens.push_back(std::to_string(m.rows()));
  e.tokens.push_back(std::to_string(m.cols()));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) e.tokens.push_back(format_double(m(r, c)));
  if (!entries_.count(key)) order_.push_back(key);
  entries_[key] = std::move(e);
}

bool Record::has(const std::string& key) const { return entries_.count(key) > 0; }

const Record::Entry& Record::at(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end())
    fail(ErrorCode::kIoError, "record '" + name_ + "' lacks key '" + key + "'");
  return it->second;
}

int64_t Record::get_int(const std::string& key) const {
  return std::stoll(at(key).tokens.at(0));
}

double Record::get_scalar(const std::string& key) const {
  return std::strtod(at(key).tokens.at(0).c_str(), nullptr);
}

std::string Record::get_string(const std::string& key) const {
  return at(key).tokens.at(0);
}

VectorXd Record::get_vector(const std::string& key) const {
  const auto& e = at(key);
  const Index n = std::stoll(e.tokens.at(0));
  VectorXd v(n);
  for (Index i = 0; i < n; ++i)
    v(i) = std::strtod(e.tokens.at(static_cast<size_t>(i) + 1).c_str(), nullptr);
  return v;
}

std::vector<int64_t> Record::get_ints(const std::string& key) const {
  const auto& e = at(key);
  const size_t n = static_cast<size_t>(std::stoll(e.tokens.at(0)));
  std::vector<int64_t> v(n);
  for (size_t i = 0; i < n; ++i) v[i] = std::stoll(e.tokens.at(i + 1));
  return v;
}

MatrixXd Record::get_matrix(const std::string& key) const {
  const auto& e = at(key);
  const Index r = std::stoll(e.tokens.at(0));
  const Index c = std::stoll(e.tokens.at(1));
  MatrixXd m(r, c);
  size_t k = 2;
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j)
      m(i, j) = std::strtod(e.tokens.at(k++).c_str(), nullptr);
  return m;
}

void Record::write(std::ostream& os) const {
  os << "record " << name_ << "\n";
  for (const auto& key : order_) {
    const auto& e = entries_.at(key);
    os << e.type << " " << key;
    for (const auto& t : e.tokens) os << " " << t;
    os << "\n";
  }
  os << "end\n";
}

std::vector<Record> read_records(std::istream& is) {
  std::vector<Record> out;
  std::string line;
  Record current;
  bool open = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string type;
    ls >> type;
    if (type == "record") {
      std::string name;
      ls >> name;
      current = Record(name);
      open = true;
      continue;
    }
    if (type == "end") {
      if (!open) fail(ErrorCode::kIoError, "stray 'end' in record stream");
      out.push_back(std::move(current));
      open = false;
      continue;
    }
    if (!open) fail(ErrorCode::kIoError, "entry outside a record: " + line);
    std::string key;
    ls >> key;
    std::vector<std::string> tokens;
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
    if (type == "int") {
      current.set_int(key, std::stoll(tokens.at(0)));
    } else if (type == "scalar") {
      current.set_scalar(key, std::strtod(tokens.at(0).c_str(), nullptr));
    } else if (type == "string") {
      current.set_string(key, tokens.at(0));
    } else if (type == "vector") {
      const Index n = std::stoll(tokens.at(0));
      VectorXd v(n);
      for (Index i = 0; i < n; ++i)
        v(i) = std::strtod(tokens.at(static_cast<size_t>(i) + 1).c_str(), nullptr);
      current.set_vector(key, v);
    } else if (type == "ints") {
      const size_t n = static_cast<size_t>(std::stoll(tokens.at(0)));
      std::vector<int64_t> v(n);
      for (size_t i = 0; i < n; ++i) v[i] = std::stoll(tokens.at(i + 1));
      current.set_ints(key, v);
    } else if (type == "matrix") {
      const Index r = std::stoll(tokens.at(0));
      const Index c = std::stoll(tokens.at(1));
      MatrixXd m(r, c);
      size_t k = 2;
      for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j)
          m(i, j) = std::strtod(tokens.at(k++).c_str(), nullptr);
      current.set_matrix(key, m);
    } else {
      fail(ErrorCode::kIoError, "unknown entry type: " + type);
    }
  }
  if (open) fail(ErrorCode::kIoError, "unterminated record");
  return out;
}

std::vector<Record> read_records_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::kIoError, "cannot open " + path);
  return read_records(is);
}

void write_records_file(const std::string& path,
                        const std::vector<Record>& records) {
  std::ofstream os(path);
  if (!os) fail(ErrorCode::kIoError, "cannot write " + path);
  for (const auto& r : records) r.write(os);
}

Record to_record(const FitResult& fit) {
  Record rec("fit_result");
  rec.set_vector("beta", fit.beta);
  rec.set_scalar("mu_star", fit.mu_star);
  if (fit.mu_upper) rec.set_scalar("mu_upper", *fit.mu_upper);
  if (fit.mu_lower) rec.set_scalar("mu_lower", *fit.mu_lower);
  rec.set_int("n_selected", fit.n_selected);
  rec.set_int("n_selected_second", fit.n_selected_second);
  rec.set_vector("residuals", fit.residuals);
  rec.set_matrix("cov_beta_mu", fit.cov_beta_mu);
  if (fit.var_mu_upper) rec.set_scalar("var_mu_upper", *fit.var_mu_upper);
  rec.set_vector("beta_ls", fit.beta_ls);
  rec.set_scalar("intercept_ls", fit.intercept_ls);
  for (const auto& [key, value] : fit.diagnostics)
    rec.set_scalar("diag." + key, value);
  return rec;
}

FitResult fit_result_from(const Record& rec) {
  FitResult fit;
  fit.beta = rec.get_vector("beta");
  fit.mu_star = rec.get_scalar("mu_star");
  if (rec.has("mu_upper")) fit.mu_upper = rec.get_scalar("mu_upper");
  if (rec.has("mu_lower")) fit.mu_lower = rec.get_scalar("mu_lower");
  fit.n_selected = rec.get_int("n_selected");
  fit.n_selected_second = rec.get_int("n_selected_second");
  fit.residuals = rec.get_vector("residuals");
  fit.cov_beta_mu = rec.get_matrix("cov_beta_mu");
  if (rec.has("var_mu_upper")) fit.var_mu_upper = rec.get_scalar("var_mu_upper");
  fit.beta_ls = rec.get_vector("beta_ls");
  fit.intercept_ls = rec.get_scalar("intercept_ls");
  for (const auto& key : rec.keys())
    if (key.rfind("diag.", 0) == 0)
      fit.diagnostics[key.substr(5)] = rec.get_scalar(key);
  return fit;
}

Record to_record(const MetricReport& report) {
  Record rec("metric_report");
  rec.set_string("rng", report.rng_name.empty() ? "none" : report.rng_name);
  rec.set_int("seed", static_cast<int64_t>(report.seed));
  rec.set_int("reps", report.reps);
  rec.set_int("failures", report.failures);
  for (const auto& [name, s] : report.per_parameter) {
    rec.set_scalar(name + ".truth", s.truth);
    rec.set_scalar(name + ".bias", s.bias);
    rec.set_scalar(name + ".mse", s.mse);
    rec.set_scalar(name + ".min", s.summary.min);
    rec.set_scalar(name + ".q1", s.summary.q1);
    rec.set_scalar(name + ".median", s.summary.median);
    rec.set_scalar(name + ".q3", s.summary.q3);
    rec.set_scalar(name + ".max", s.summary.max);
    rec.set_scalar(name + ".whisker_lo", s.summary.whisker_lo);
    rec.set_scalar(name + ".whisker_hi", s.summary.whisker_hi);
    rec.set_vector(name + ".outliers", s.summary.outliers);
    rec.set_int(name + ".count", s.count);
  }
  for (const auto& [mode, ps] : report.predictions) {
    rec.set_vector("ape_curve." + mode, ps.ape_curve);
    rec.set_scalar("ape_all." + mode, ps.ape_all);
    rec.set_vector("r2_curve." + mode, ps.r2_curve);
  }
  if (!report.predictions.empty())
    rec.set_scalar("max_below_ls_fraction", report.max_below_ls_fraction);
  return rec;
}

}  // namespace pmls
