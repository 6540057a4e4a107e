#include "pmls/csv.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace pmls {

CsvSchema schema_from(const std::string& name) {
  if (name == "generic") return CsvSchema::kGeneric;
  if (name == "bankSalary" || name == "bank") return CsvSchema::kBankSalary;
  fail(ErrorCode::kInvalidArgument, "unknown schema: " + name);
}

const std::vector<std::string>& bank_design_columns() {
  static const std::vector<std::string> cols = {
      "Gender", "PCJob", "Edu1", "Edu2", "Edu3", "Edu4",
      "JobGrd1", "JobGrd2", "JobGrd3", "JobGrd4", "JobGrd5"};
  return cols;
}

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  std::string t = s.substr(b, e - b);
  if (t.size() >= 2 && t.front() == '"' && t.back() == '"')
    t = t.substr(1, t.size() - 2);
  return t;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ls(line);
  while (std::getline(ls, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_cell(const std::string& cell, size_t row, size_t col) {
  char* end = nullptr;
  const std::string t = trim(cell);
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size()) {
    std::ostringstream os;
    os << "unparseable cell at row " << row + 1 << ", column " << col + 1 << ": '"
       << cell << "'";
    fail(ErrorCode::kUnparseableCell, os.str());
  }
  return v;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Table read_table(const std::string& text) {
  Table t;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (t.header.empty())
      t.header = split_line(line);
    else
      t.rows.push_back(split_line(line));
  }
  if (t.header.empty()) fail(ErrorCode::kSchemaMismatch, "missing header row");
  if (t.rows.empty()) fail(ErrorCode::kSchemaMismatch, "no data rows");
  for (size_t r = 0; r < t.rows.size(); ++r)
    if (t.rows[r].size() != t.header.size()) {
      std::ostringstream os;
      os << "row " << r + 2 << " has " << t.rows[r].size() << " cells, expected "
         << t.header.size();
      fail(ErrorCode::kSchemaMismatch, os.str());
    }
  return t;
}

Dataset from_generic(const Table& t) {
  const size_t cols = t.header.size();
  if (cols < 2)
    fail(ErrorCode::kSchemaMismatch, "generic schema needs >= 2 columns");
  const Index n = static_cast<Index>(t.rows.size());
  MatrixXd X(n, static_cast<Index>(cols - 1));
  VectorXd Y(n);
  for (size_t r = 0; r < t.rows.size(); ++r) {
    for (size_t c = 0; c + 1 < cols; ++c)
      X(static_cast<Index>(r), static_cast<Index>(c)) =
          parse_cell(t.rows[r][c], r, c);
    Y(static_cast<Index>(r)) = parse_cell(t.rows[r][cols - 1], r, cols - 1);
  }
  return validate_dataset(std::move(X), std::move(Y));
}

Dataset from_bank(const Table& t) {
  auto find_col = [&](const std::string& name, bool required) -> int {
    for (size_t c = 0; c < t.header.size(); ++c)
      if (lower(t.header[c]) == lower(name)) return static_cast<int>(c);
    if (required)
      fail(ErrorCode::kSchemaMismatch, "missing required column: " + name);
    return -1;
  };
  const int c_edu = find_col("EduLev", true);
  const int c_job = find_col("JobGrade", true);
  const int c_gender = find_col("Gender", true);
  const int c_pc = find_col("PCJob", true);
  const int c_salary = find_col("Salary", true);
  const int parsed_only[3] = {find_col("YrHired", false), find_col("YrBorn", false),
                              find_col("YrsPrior", false)};

  const Index n = static_cast<Index>(t.rows.size());
  MatrixXd X = MatrixXd::Zero(n, 11);
  VectorXd Y(n);
  for (size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const Index i = static_cast<Index>(r);

    const std::string g = lower(row[static_cast<size_t>(c_gender)]);
    double gender;
    if (g == "female" || g == "1")
      gender = 1.0;
    else if (g == "male" || g == "0")
      gender = 0.0;
    else {
      std::ostringstream os;
      os << "unparseable cell at row " << r + 1 << ", column " << c_gender + 1
         << ": '" << row[static_cast<size_t>(c_gender)] << "'";
      fail(ErrorCode::kUnparseableCell, os.str());
    }
    X(i, 0) = gender;

    const double pc = parse_cell(row[static_cast<size_t>(c_pc)], r,
                                 static_cast<size_t>(c_pc));
    X(i, 1) = pc;

    const double edu = parse_cell(row[static_cast<size_t>(c_edu)], r,
                                  static_cast<size_t>(c_edu));
    if (edu < 1 || edu > 5 || edu != std::floor(edu))
      fail(ErrorCode::kSchemaMismatch, "EduLev outside 1..5");
    if (edu < 5) X(i, 2 + static_cast<Index>(edu) - 1) = 1.0;  // level 5 reference

    const double grade = parse_cell(row[static_cast<size_t>(c_job)], r,
                                    static_cast<size_t>(c_job));
    if (grade < 1 || grade > 6 || grade != std::floor(grade))
      fail(ErrorCode::kSchemaMismatch, "JobGrade outside 1..6");
    if (grade < 6) X(i, 6 + static_cast<Index>(grade) - 1) = 1.0;  // grade 6 reference

    Y(i) = parse_cell(row[static_cast<size_t>(c_salary)], r,
                      static_cast<size_t>(c_salary));

    for (int c : parsed_only)
      if (c >= 0) parse_cell(row[static_cast<size_t>(c)], r, static_cast<size_t>(c));
  }
  return validate_dataset(std::move(X), std::move(Y));
}

}  // namespace

Dataset parse_csv_text(const std::string& text, CsvSchema schema) {
  const Table t = read_table(text);
  return schema == CsvSchema::kGeneric ? from_generic(t) : from_bank(t);
}

Dataset ingest_csv(const std::string& path, CsvSchema schema) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::kIoError, "cannot open " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_csv_text(buf.str(), schema);
}

}  // namespace pmls
