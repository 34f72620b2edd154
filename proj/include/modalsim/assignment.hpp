// assignment.hpp — maximum-weight perfect matching (Hungarian algorithm).

#pragma once

#include <Eigen/Dense>

#include <vector>

namespace modalsim::assignment {

// For a square weight matrix w (rows = targets i, columns = sources j)
// returns perm with perm[j] = i such that sum_j w(perm[j], j) is maximal.
// Ties are resolved deterministically by the algorithm's scan order.
std::vector<int> max_weight_matching(const Eigen::MatrixXd& w);

}  // namespace modalsim::assignment
