#pragma once

#include <vector>

#include <Eigen/Core>

namespace occtrack {

/// Minimum-cost rectangular assignment (Kuhn-Munkres with potentials,
/// O(n^2 m)). Every row is assigned when rows <= cols, every column otherwise.
/// Returns the column for each row, or -1. Deterministic for a given matrix.
std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost);

}  // namespace occtrack
