#include "rjdcov/ot_ranks.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "rjdcov/errors.hpp"

namespace rjdcov {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// One Dijkstra-style augmenting search from `start_row`; returns the sink
/// column and leaves dual-update bookkeeping in the scratch arrays.
int augmenting_path(const Eigen::MatrixXd& cost, std::vector<double>& u, std::vector<double>& v,
                    std::vector<int>& path, std::vector<int>& row4col,
                    std::vector<double>& shortest, std::vector<bool>& SR, std::vector<bool>& SC,
                    std::vector<int>& remaining, int start_row, double& min_val) {
    const int n = static_cast<int>(cost.rows());
    min_val = 0.0;
    int num_remaining = n;
    for (int j = 0; j < n; ++j) {
        remaining[static_cast<std::size_t>(j)] = n - 1 - j;
        shortest[static_cast<std::size_t>(j)] = kInf;
        SC[static_cast<std::size_t>(j)] = false;
    }
    std::fill(SR.begin(), SR.end(), false);

    int sink = -1;
    int i = start_row;
    while (sink == -1) {
        SR[static_cast<std::size_t>(i)] = true;
        int index = -1;
        double lowest = kInf;
        for (int it = 0; it < num_remaining; ++it) {
            const int j = remaining[static_cast<std::size_t>(it)];
            const double r = min_val + cost(i, j) - u[static_cast<std::size_t>(i)] -
                             v[static_cast<std::size_t>(j)];
            if (r < shortest[static_cast<std::size_t>(j)]) {
                path[static_cast<std::size_t>(j)] = i;
                shortest[static_cast<std::size_t>(j)] = r;
            }
            if (shortest[static_cast<std::size_t>(j)] < lowest ||
                (shortest[static_cast<std::size_t>(j)] == lowest &&
                 row4col[static_cast<std::size_t>(j)] == -1)) {
                lowest = shortest[static_cast<std::size_t>(j)];
                index = it;
            }
        }
        min_val = lowest;
        const int j = remaining[static_cast<std::size_t>(index)];
        if (row4col[static_cast<std::size_t>(j)] == -1) {
            sink = j;
        } else {
            i = row4col[static_cast<std::size_t>(j)];
        }
        SC[static_cast<std::size_t>(j)] = true;
        remaining[static_cast<std::size_t>(index)] = remaining[static_cast<std::size_t>(--num_remaining)];
    }
    return sink;
}

}  // namespace

std::vector<int> solve_lap(const Eigen::MatrixXd& cost) {
    if (cost.rows() != cost.cols()) throw SizeMismatch("solve_lap: cost matrix must be square");
    const int n = static_cast<int>(cost.rows());
    std::vector<double> u(static_cast<std::size_t>(n), 0.0);
    std::vector<double> v(static_cast<std::size_t>(n), 0.0);
    std::vector<double> shortest(static_cast<std::size_t>(n));
    std::vector<int> path(static_cast<std::size_t>(n), -1);
    std::vector<int> col4row(static_cast<std::size_t>(n), -1);
    std::vector<int> row4col(static_cast<std::size_t>(n), -1);
    std::vector<bool> SR(static_cast<std::size_t>(n));
    std::vector<bool> SC(static_cast<std::size_t>(n));
    std::vector<int> remaining(static_cast<std::size_t>(n));

    for (int cur_row = 0; cur_row < n; ++cur_row) {
        double min_val = 0.0;
        const int sink = augmenting_path(cost, u, v, path, row4col, shortest, SR, SC, remaining,
                                         cur_row, min_val);

        u[static_cast<std::size_t>(cur_row)] += min_val;
        for (int i = 0; i < n; ++i) {
            if (SR[static_cast<std::size_t>(i)] && i != cur_row)
                u[static_cast<std::size_t>(i)] +=
                    min_val - shortest[static_cast<std::size_t>(col4row[static_cast<std::size_t>(i)])];
        }
        for (int j = 0; j < n; ++j) {
            if (SC[static_cast<std::size_t>(j)])
                v[static_cast<std::size_t>(j)] -= min_val - shortest[static_cast<std::size_t>(j)];
        }

        int j = sink;
        for (;;) {
            const int i = path[static_cast<std::size_t>(j)];
            row4col[static_cast<std::size_t>(j)] = i;
            std::swap(col4row[static_cast<std::size_t>(i)], j);
            if (i == cur_row) break;
        }
    }
    return col4row;
}

RankAssignment solve_rank_map(const Eigen::MatrixXd& observations, const ReferenceGrid& grid) {
    const int n = static_cast<int>(observations.rows());
    if (observations.cols() != grid.dim)
        throw DimensionMismatch("solve_rank_map: observation dimension " +
                                std::to_string(observations.cols()) + " != grid dimension " +
                                std::to_string(grid.dim));
    if (n != grid.size())
        throw SizeMismatch("solve_rank_map: " + std::to_string(n) + " observations vs " +
                           std::to_string(grid.size()) + " grid points");

    RankAssignment out;
    out.perm.resize(static_cast<std::size_t>(n));

    if (grid.dim == 1) {
        // 1-d optimal transport is monotone: k-th smallest observation gets
        // the k-th smallest grid point.
        std::vector<int> obs_order(static_cast<std::size_t>(n));
        std::vector<int> grid_order(static_cast<std::size_t>(n));
        std::iota(obs_order.begin(), obs_order.end(), 0);
        std::iota(grid_order.begin(), grid_order.end(), 0);
        std::stable_sort(obs_order.begin(), obs_order.end(),
                         [&](int a, int b) { return observations(a, 0) < observations(b, 0); });
        std::stable_sort(grid_order.begin(), grid_order.end(),
                         [&](int a, int b) { return grid.points(a, 0) < grid.points(b, 0); });
        for (int k = 0; k < n; ++k)
            out.perm[static_cast<std::size_t>(obs_order[static_cast<std::size_t>(k)])] =
                grid_order[static_cast<std::size_t>(k)];
    } else {
        Eigen::MatrixXd cost(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                cost(i, j) = (observations.row(i) - grid.points.row(j)).squaredNorm();
        out.perm = solve_lap(cost);
    }

    out.cost = 0.0;
    for (int i = 0; i < n; ++i)
        out.cost +=
            (observations.row(i) - grid.points.row(out.perm[static_cast<std::size_t>(i)])).squaredNorm();
    return out;
}

Eigen::MatrixXd rank_points(const RankAssignment& assignment, const ReferenceGrid& grid) {
    const int n = grid.size();
    if (static_cast<int>(assignment.perm.size()) != n)
        throw SizeMismatch("rank_points: assignment and grid sizes differ");
    Eigen::MatrixXd pts(n, grid.dim);
    for (int i = 0; i < n; ++i)
        pts.row(i) = grid.points.row(assignment.perm[static_cast<std::size_t>(i)]);
    return pts;
}

}  // namespace rjdcov
