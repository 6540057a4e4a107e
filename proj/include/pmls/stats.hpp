#pragma once

#include <Eigen/Dense>
#include <vector>

namespace pmls {

double mean_of(const std::vector<double>& v);
double sample_variance(const std::vector<double>& v);  // n-1 divisor
double sample_skewness(const std::vector<double>& v);

// Linear-interpolation quantile (R type 7) on an unsorted copy.
double quantile(std::vector<double> v, double q);
double median_of(std::vector<double> v);

struct FiveNumber {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  double whisker_lo = 0, whisker_hi = 0;  // innermost points within 1.5 IQR
  std::vector<double> outliers;
};

FiveNumber five_number_summary(std::vector<double> v);

}  // namespace pmls
