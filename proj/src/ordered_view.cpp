#include "pmls/ordered_view.hpp"

#include <algorithm>
#include <numeric>

namespace pmls {

OrderedView order_view(const Eigen::VectorXd& values) {
  if (!values.allFinite())
    fail(ErrorCode::kNonFinite, "order_view requires finite values");
  const Eigen::Index n = values.size();
  OrderedView view;
  view.original_index.resize(static_cast<size_t>(n));
  std::iota(view.original_index.begin(), view.original_index.end(), Eigen::Index{0});
  // descending by value, ascending original index on ties
  std::sort(view.original_index.begin(), view.original_index.end(),
            [&](Eigen::Index a, Eigen::Index b) {
              if (values(a) != values(b)) return values(a) > values(b);
              return a < b;
            });
  view.values.resize(n);
  for (Eigen::Index r = 0; r < n; ++r)
    view.values(r) = values(view.original_index[static_cast<size_t>(r)]);
  return view;
}

std::vector<Eigen::Index> OrderedView::upper_half(Eigen::Index n) const {
  if (n < 0 || n > size())
    fail(ErrorCode::kInvalidArgument, "prefix length out of range");
  return {original_index.begin(), original_index.begin() + upper_size(n)};
}

std::vector<Eigen::Index> OrderedView::lower_half(Eigen::Index n) const {
  if (n < 0 || n > size())
    fail(ErrorCode::kInvalidArgument, "prefix length out of range");
  return {original_index.begin() + upper_size(n), original_index.begin() + n};
}

}  // namespace pmls
