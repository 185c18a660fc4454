#ifndef MOBILITY_ASSIGNMENT_HPP
#define MOBILITY_ASSIGNMENT_HPP

#include <vector>

#include <Eigen/Core>

namespace mobility {

struct Assignment {
  std::vector<int> row_to_col;  ///< -1 for unassigned rows
  double total_cost = 0.0;
};

/// Minimum-cost assignment (Hungarian method with potentials, O(n^2 m)) for a
/// rectangular matrix; min(rows, cols) pairs are assigned. Costs must be finite.
Assignment solve_assignment(const Eigen::MatrixXd& cost);

}  // namespace mobility

#endif  // MOBILITY_ASSIGNMENT_HPP
