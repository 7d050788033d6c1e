#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace gbridge {

/// Exact h(t, x) = P(X_T = x_T | X_t = x) tabulated on a time grid for a
/// finite state space {offset, offset + 1, ...}.
struct OracleTable {
  std::vector<double> grid;
  /// Row i holds h(grid[i], offset + k) in column k.
  Eigen::MatrixXd h_values;
  std::int64_t offset = 0;

  double h(std::size_t grid_index, std::int64_t x) const {
    return h_values(static_cast<Eigen::Index>(grid_index), static_cast<Eigen::Index>(x - offset));
  }
};

}  // namespace gbridge
