#pragma once

#include <Eigen/Dense>
#include <vector>

#include "rjdcov/reference_grid.hpp"

namespace rjdcov {

/// Empirical optimal-transport rank map: observation a is assigned grid
/// point perm[a] (0-based). `cost` is the attained total squared distance,
/// minimal over all permutations.
struct RankAssignment {
    std::vector<int> perm;
    double cost = 0.0;
};

/// Exact solution of the square linear assignment problem
/// min_sigma sum_i cost(i, sigma(i)) by shortest augmenting paths with dual
/// potentials (Jonker-Volgenant family, O(n^3)). Returns sigma as a vector.
std::vector<int> solve_lap(const Eigen::MatrixXd& cost);

/// Solves min over permutations of sum_a ||obs_a - grid_{sigma(a)}||^2.
/// For dim 1 the solver short-circuits to monotone matching of sorted
/// observations against sorted grid points; otherwise the dense LAP runs on
/// the squared-distance matrix. Ties between equally good assignments
/// resolve by the solver's fixed scan order.
RankAssignment solve_rank_map(const Eigen::MatrixXd& observations, const ReferenceGrid& grid);

/// The rank-transformed sample (h_{perm(a)})_a in observation order.
Eigen::MatrixXd rank_points(const RankAssignment& assignment, const ReferenceGrid& grid);

}  // namespace rjdcov
