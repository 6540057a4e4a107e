#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "pmls/evaluation.hpp"
#include "pmls/types.hpp"

namespace pmls {

// Line-oriented record format. A stream holds framed records:
//
//   record <name>
//   int <key> <value>
//   scalar <key> <value>            (printed with 17 significant digits)
//   string <key> <token>
//   vector <key> <len> <v0> ...
//   ints <key> <len> <v0> ...
//   matrix <key> <rows> <cols> <row-major entries>
//   end
//
// Blank lines and lines starting with '#' are ignored.
class Record {
 public:
  Record() = default;
  explicit Record(std::string name) : name_(std::move(name)) {}

  const std::string& name() const { return name_; }

  void set_int(const std::string& key, int64_t v);
  void set_scalar(const std::string& key, double v);
  void set_string(const std::string& key, const std::string& v);
  void set_vector(const std::string& key, const VectorXd& v);
  void set_vector(const std::string& key, const std::vector<double>& v);
  void set_ints(const std::string& key, const std::vector<int64_t>& v);
  void set_matrix(const std::string& key, const MatrixXd& m);

  bool has(const std::string& key) const;
  int64_t get_int(const std::string& key) const;
  double get_scalar(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  VectorXd get_vector(const std::string& key) const;
  std::vector<int64_t> get_ints(const std::string& key) const;
  MatrixXd get_matrix(const std::string& key) const;

  void write(std::ostream& os) const;

  const std::vector<std::string>& keys() const { return order_; }

 private:
  struct Entry {
    std::string type;
    std::vector<std::string> tokens;
  };
  const Entry& at(const std::string& key) const;

  std::string name_;
  std::map<std::string, Entry> entries_;
  std::vector<std::string> order_;
};

std::vector<Record> read_records(std::istream& is);
std::vector<Record> read_records_file(const std::string& path);
void write_records_file(const std::string& path,
                        const std::vector<Record>& records);

// 17-significant-digit text form that round-trips doubles exactly.
std::string format_double(double v);

Record to_record(const FitResult& fit);
FitResult fit_result_from(const Record& rec);

Record to_record(const MetricReport& report);

}  // namespace pmls
