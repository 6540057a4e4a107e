#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pmls/errors.hpp"

namespace pmls {

// Descending ordering of a vector with stable tie-breaking by original index,
// plus the half-split accessors used by every penalty statistic: for a prefix
// of length n, U_n holds the original indices of ranks [0, n/2) and L_n the
// indices of ranks [n/2, n).
struct OrderedView {
  Eigen::VectorXd values;                    // descending
  std::vector<Eigen::Index> original_index;  // original_index[rank] = row

  Eigen::Index size() const { return values.size(); }

  Eigen::Index upper_size(Eigen::Index n) const { return n / 2; }

  std::vector<Eigen::Index> upper_half(Eigen::Index n) const;
  std::vector<Eigen::Index> lower_half(Eigen::Index n) const;
};

OrderedView order_view(const Eigen::VectorXd& values);

}  // namespace pmls
