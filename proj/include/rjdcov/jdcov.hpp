#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "rjdcov/errors.hpp"
#include "rjdcov/ot_ranks.hpp"
#include "rjdcov/reference_grid.hpp"

namespace rjdcov {

/// n observations of r vector-valued blocks; block i is an n x d_i matrix.
struct BlockedSample {
    std::vector<Eigen::MatrixXd> blocks;
    std::vector<std::string> labels;  // optional block names

    BlockedSample() = default;
    explicit BlockedSample(std::vector<Eigen::MatrixXd> b, std::vector<std::string> l = {});

    int n() const { return blocks.empty() ? 0 : static_cast<int>(blocks.front().rows()); }
    int r() const { return static_cast<int>(blocks.size()); }
    std::vector<int> block_dims() const;
    int total_dim() const;
};

/// Double-centered rank-distance matrix of one block; alias for the dense
/// n x n value matrix (block identity is positional throughout).
using CenteredDistanceMatrix = Eigen::MatrixXd;

/// Subset weights: either explicit (C_2,...,C_r) or geometric C_s = c^{r-s}.
/// geometric(0) selects only the full set S = {1..r} (0^0 = 1).
class WeightScheme {
  public:
    static WeightScheme geometric(double c);
    static WeightScheme explicit_weights(std::vector<double> c2_to_cr);

    /// C_s for s = 2..r as a vector indexed by s (entries 0,1 unused).
    std::vector<double> by_size(int r) const;

    bool is_geometric() const { return geometric_; }
    double geometric_c() const { return c_; }

  private:
    WeightScheme() = default;
    bool geometric_ = true;
    double c_ = 1.0;
    std::vector<double> explicit_;  // C_2..C_r
};

/// Statistic for one subset S (0-based block indices, |S| >= 2).
struct SubsetStatistic {
    std::vector<int> subset;
    double value = 0.0;
};

struct RjdcovResult {
    double total = 0.0;
    std::vector<SubsetStatistic> decomposition;  // ordered by size, then lexicographic
};

/// Double centering of the pairwise Euclidean distance matrix of the rows of
/// `rank_pts`, with the sign convention
///   E(a,b) = rowmean_a + colmean_b - dist(a,b) - grandmean,
/// so every row and column sums to zero exactly.
Eigen::MatrixXd centered_matrix(const Eigen::Ref<const Eigen::MatrixXd>& rank_pts);

/// V-statistic (1/n^2) sum_{a,b} prod_{i in S} E_i(a,b). May be negative in
/// finite samples for odd |S|; reported unclamped.
SubsetStatistic rdcov_subset(const std::vector<CenteredDistanceMatrix>& matrices,
                             const std::vector<int>& subset);

/// Weighted total sum_s C_s sum_{|S|=s} RdCov2_n(X_S) evaluated in one pass
/// over (a,b) through elementary symmetric polynomials of the per-block
/// entries (O(n^2 r^2), no 2^r blow-up). Optional per-block permutations
/// evaluate the statistic on row/column-permuted matrices:
/// E_pi(a,b) = E(pi(a), pi(b)).
double weighted_statistic(const std::vector<CenteredDistanceMatrix>& matrices,
                          const WeightScheme& weights,
                          const std::vector<std::vector<int>>* perms = nullptr);

/// Rank maps per block (OT assignment against each grid), then the centered
/// matrix of each block's rank points.
std::vector<CenteredDistanceMatrix> centered_matrices_for(const BlockedSample& sample,
                                                          const std::vector<ReferenceGrid>& grids);

/// Full estimator: rank maps via ot_ranks, all 2^r - r - 1 subset statistics,
/// and the weighted total. max_r guards the subset enumeration.
RjdcovResult estimate_rjdcov(const BlockedSample& sample, const std::vector<ReferenceGrid>& grids,
                    const WeightScheme& weights, int max_r = 12);

/// Product form (1/n^2) sum_{a,b} prod_i (E_i(a,b) + c) - c^r; equals
/// rjdcov with geometric(c) weights because singleton terms vanish.
double estimate_rjdcov_compact(const BlockedSample& sample, const std::vector<ReferenceGrid>& grids,
                      double c);

/// Same product form on precomputed centered matrices.
double compact_statistic(const std::vector<CenteredDistanceMatrix>& matrices, double c);

/// The calibration functional: the weighted statistic with the rank points
/// replaced by permuted grid points (per-block permutations of the grids'
/// centered matrices).
double theta_on_grids(const std::vector<std::vector<int>>& perms,
                      const std::vector<ReferenceGrid>& grids, const WeightScheme& weights);

/// CSV export `subset,size,rdcov2,weight,contribution` (1-based subsets).
void write_decomposition_csv(const std::string& path, const RjdcovResult& result,
                             const WeightScheme& weights, int r);

/// All subsets of {0..r-1} with size >= 2, ordered by size then lexicographic.
std::vector<std::vector<int>> enumerate_subsets(int r);

}  // namespace rjdcov
