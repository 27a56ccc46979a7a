#include "smaq/types.hpp"

namespace smaq {

Dataset Dataset::rows(const std::vector<Eigen::Index>& index) const {
  Dataset out;
  const auto m = static_cast<Eigen::Index>(index.size());
  out.x.resize(m, x.cols());
  out.y.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    out.x.row(i) = x.row(index[static_cast<std::size_t>(i)]);
    out.y(i) = y(index[static_cast<std::size_t>(i)]);
  }
  out.predictor_names = predictor_names;
  out.response_name = response_name;
  return out;
}

}  // namespace smaq
