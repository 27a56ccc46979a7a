#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace smaq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// An n x p predictor matrix with its n-vector response.
struct Dataset {
  Matrix x;
  Vector y;
  std::vector<std::string> predictor_names;  // empty or size p
  std::string response_name;

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index p() const { return x.cols(); }

  /// Rows picked by index, in the given order (duplicates allowed).
  Dataset rows(const std::vector<Eigen::Index>& index) const;
};

}  // namespace smaq
