#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

namespace rjdcov {

enum class GridKind { Halton, IidUniform };

/// Fixed discretization of Unif([0,1]^dim) used as the target of the
/// empirical rank maps and as the sole input of the data-agnostic
/// calibration. Rows of `points` are the grid points h_1,...,h_n.
///
/// Invariants: every coordinate lies in [0,1], points are pairwise distinct,
/// and rows(points) equals the declared sample size.
struct ReferenceGrid {
    int dim = 0;
    Eigen::MatrixXd points;  // n x dim
    GridKind kind = GridKind::Halton;
    std::uint64_t seed = 0;  // meaningful for IidUniform only

    int size() const { return static_cast<int>(points.rows()); }

    /// Cache-key component: kind, seed for random grids, n and dim.
    std::string key() const;

    /// CSV export `index,x1,...,xd` (1-based index column).
    void write_csv(const std::string& path) const;
};

/// First n points of the Halton sequence in [0,1]^dim, using the first `dim`
/// primes as bases and starting from index 1 (the all-zeros point at index 0
/// is skipped). Deterministic in (n, dim). Warns on stderr for dim > 8 where
/// unscrambled Halton develops correlation artifacts.
ReferenceGrid halton_grid(int n, int dim);

/// n i.i.d. Unif([0,1]^dim) points, reproducible from the seed.
ReferenceGrid iid_uniform_grid(int n, int dim, std::uint64_t seed);

/// Radical inverse of index in the given base; the Halton coordinate.
double radical_inverse(std::uint64_t index, unsigned base);

}  // namespace rjdcov
