#include "rjdcov/jdcov.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace rjdcov {

BlockedSample::BlockedSample(std::vector<Eigen::MatrixXd> b, std::vector<std::string> l)
    : blocks(std::move(b)), labels(std::move(l)) {
    if (blocks.size() < 2) throw SizeMismatch("BlockedSample: need r >= 2 blocks");
    const auto rows = blocks.front().rows();
    for (const auto& blk : blocks) {
        if (blk.rows() != rows) throw SizeMismatch("BlockedSample: blocks disagree on n");
        if (blk.cols() < 1) throw DimensionMismatch("BlockedSample: empty block");
    }
    if (!labels.empty() && labels.size() != blocks.size())
        throw SizeMismatch("BlockedSample: label count != block count");
}

std::vector<int> BlockedSample::block_dims() const {
    std::vector<int> d;
    d.reserve(blocks.size());
    for (const auto& blk : blocks) d.push_back(static_cast<int>(blk.cols()));
    return d;
}

int BlockedSample::total_dim() const {
    int t = 0;
    for (const auto& blk : blocks) t += static_cast<int>(blk.cols());
    return t;
}

WeightScheme WeightScheme::geometric(double c) {
    if (c < 0) throw std::invalid_argument("WeightScheme: c must be nonnegative");
    WeightScheme w;
    w.geometric_ = true;
    w.c_ = c;
    return w;
}

WeightScheme WeightScheme::explicit_weights(std::vector<double> c2_to_cr) {
    for (double v : c2_to_cr)
        if (v < 0) throw std::invalid_argument("WeightScheme: weights must be nonnegative");
    WeightScheme w;
    w.geometric_ = false;
    w.explicit_ = std::move(c2_to_cr);
    return w;
}

std::vector<double> WeightScheme::by_size(int r) const {
    if (r < 2) throw SizeMismatch("WeightScheme: r must be >= 2");
    std::vector<double> out(static_cast<std::size_t>(r) + 1, 0.0);
    if (geometric_) {
        for (int s = 2; s <= r; ++s)
            out[static_cast<std::size_t>(s)] = (s == r) ? 1.0 : std::pow(c_, r - s);
    } else {
        if (static_cast<int>(explicit_.size()) != r - 1)
            throw SizeMismatch("WeightScheme: explicit weights must cover s = 2..r");
        for (int s = 2; s <= r; ++s)
            out[static_cast<std::size_t>(s)] = explicit_[static_cast<std::size_t>(s) - 2];
    }
    return out;
}

Eigen::MatrixXd centered_matrix(const Eigen::Ref<const Eigen::MatrixXd>& rank_pts) {
    const int n = static_cast<int>(rank_pts.rows());
    if (n < 2) throw SizeMismatch("centered_matrix: need n >= 2");

    Eigen::MatrixXd dist(n, n);
    for (int a = 0; a < n; ++a) {
        dist(a, a) = 0.0;
        for (int b = a + 1; b < n; ++b) {
            const double d = (rank_pts.row(a) - rank_pts.row(b)).norm();
            dist(a, b) = d;
            dist(b, a) = d;
        }
    }
    const Eigen::VectorXd row_mean = dist.rowwise().mean();
    const double grand = row_mean.mean();

    Eigen::MatrixXd centered(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            centered(a, b) = row_mean(a) + row_mean(b) - dist(a, b) - grand;
    return centered;
}

SubsetStatistic rdcov_subset(const std::vector<CenteredDistanceMatrix>& matrices,
                             const std::vector<int>& subset) {
    if (subset.size() < 2) throw SizeMismatch("rdcov_subset: need |S| >= 2");
    if (matrices.empty()) throw SizeMismatch("rdcov_subset: no centered matrices");
    const int n = static_cast<int>(matrices.front().rows());
    for (int i : subset) {
        if (i < 0 || i >= static_cast<int>(matrices.size()))
            throw SizeMismatch("rdcov_subset: block index out of range");
        if (matrices[static_cast<std::size_t>(i)].rows() != n)
            throw SizeMismatch("rdcov_subset: matrices disagree on n");
    }
    double sum = 0.0;
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            double prod = 1.0;
            for (int i : subset) prod *= matrices[static_cast<std::size_t>(i)](a, b);
            sum += prod;
        }
    }
    return {subset, sum / (static_cast<double>(n) * static_cast<double>(n))};
}

double weighted_statistic(const std::vector<CenteredDistanceMatrix>& matrices,
                          const WeightScheme& weights,
                          const std::vector<std::vector<int>>* perms) {
    const int r = static_cast<int>(matrices.size());
    const int n = static_cast<int>(matrices.front().rows());
    for (const auto& m : matrices)
        if (m.rows() != n || m.cols() != n)
            throw SizeMismatch("weighted_statistic: matrices disagree on n");
    if (perms) {
        if (static_cast<int>(perms->size()) != r)
            throw SizeMismatch("weighted_statistic: need one permutation per block");
        for (const auto& p : *perms)
            if (static_cast<int>(p.size()) != n)
                throw SizeMismatch("weighted_statistic: permutation length != n");
    }
    const std::vector<double> coef = weights.by_size(r);

    // Per entry, esp[s] accumulates the elementary symmetric polynomial of
    // the r block values; the weighted total needs sum_s C_s * esp[s].
    std::vector<double> esp(static_cast<std::size_t>(r) + 1);
    double total = 0.0;
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            esp[0] = 1.0;
            int degree = 0;
            for (int i = 0; i < r; ++i) {
                const auto& m = matrices[static_cast<std::size_t>(i)];
                const double e =
                    perms ? m((*perms)[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)],
                              (*perms)[static_cast<std::size_t>(i)][static_cast<std::size_t>(b)])
                          : m(a, b);
                ++degree;
                esp[static_cast<std::size_t>(degree)] = 0.0;
                for (int s = degree; s >= 1; --s)
                    esp[static_cast<std::size_t>(s)] += e * esp[static_cast<std::size_t>(s) - 1];
            }
            double entry = 0.0;
            for (int s = 2; s <= r; ++s)
                entry += coef[static_cast<std::size_t>(s)] * esp[static_cast<std::size_t>(s)];
            total += entry;
        }
    }
    return total / (static_cast<double>(n) * static_cast<double>(n));
}

std::vector<CenteredDistanceMatrix> centered_matrices_for(const BlockedSample& sample,
                                                          const std::vector<ReferenceGrid>& grids) {
    if (grids.size() != sample.blocks.size())
        throw SizeMismatch("need one reference grid per block");
    std::vector<CenteredDistanceMatrix> mats;
    mats.reserve(sample.blocks.size());
    for (std::size_t i = 0; i < sample.blocks.size(); ++i) {
        const auto assignment = solve_rank_map(sample.blocks[i], grids[i]);
        mats.push_back(centered_matrix(rank_points(assignment, grids[i])));
    }
    return mats;
}

std::vector<std::vector<int>> enumerate_subsets(int r) {
    std::vector<std::vector<int>> subsets;
    for (int size = 2; size <= r; ++size) {
        std::vector<int> idx(static_cast<std::size_t>(size));
        for (int i = 0; i < size; ++i) idx[static_cast<std::size_t>(i)] = i;
        for (;;) {
            subsets.push_back(idx);
            int k = size - 1;
            while (k >= 0 && idx[static_cast<std::size_t>(k)] == r - size + k) --k;
            if (k < 0) break;
            ++idx[static_cast<std::size_t>(k)];
            for (int j = k + 1; j < size; ++j)
                idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j) - 1] + 1;
        }
    }
    return subsets;
}

RjdcovResult estimate_rjdcov(const BlockedSample& sample, const std::vector<ReferenceGrid>& grids,
                    const WeightScheme& weights, int max_r) {
    if (sample.r() > max_r)
        throw SizeMismatch("estimate_rjdcov: r = " + std::to_string(sample.r()) +
                           " exceeds the subset-enumeration cap (" + std::to_string(max_r) +
                           "); raise max_r to override");
    const auto mats = centered_matrices_for(sample, grids);
    RjdcovResult result;
    for (const auto& subset : enumerate_subsets(sample.r()))
        result.decomposition.push_back(rdcov_subset(mats, subset));
    result.total = weighted_statistic(mats, weights);
    return result;
}

double compact_statistic(const std::vector<CenteredDistanceMatrix>& matrices, double c) {
    const int r = static_cast<int>(matrices.size());
    const int n = static_cast<int>(matrices.front().rows());
    double sum = 0.0;
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            double prod = 1.0;
            for (int i = 0; i < r; ++i) prod *= matrices[static_cast<std::size_t>(i)](a, b) + c;
            sum += prod;
        }
    }
    return sum / (static_cast<double>(n) * static_cast<double>(n)) - std::pow(c, r);
}

double estimate_rjdcov_compact(const BlockedSample& sample, const std::vector<ReferenceGrid>& grids,
                      double c) {
    if (c < 0) throw std::invalid_argument("estimate_rjdcov_compact: c must be nonnegative");
    return compact_statistic(centered_matrices_for(sample, grids), c);
}

double theta_on_grids(const std::vector<std::vector<int>>& perms,
                      const std::vector<ReferenceGrid>& grids, const WeightScheme& weights) {
    if (perms.size() != grids.size())
        throw SizeMismatch("theta_on_grids: need one permutation per grid");
    for (std::size_t i = 0; i < perms.size(); ++i) {
        const int n = grids[i].size();
        if (static_cast<int>(perms[i].size()) != n)
            throw SizeMismatch("theta_on_grids: permutation length != n");
        std::vector<bool> seen(static_cast<std::size_t>(n), false);
        for (int v : perms[i]) {
            if (v < 0 || v >= n || seen[static_cast<std::size_t>(v)])
                throw SizeMismatch("theta_on_grids: not a permutation of 0..n-1");
            seen[static_cast<std::size_t>(v)] = true;
        }
    }
    std::vector<CenteredDistanceMatrix> mats;
    mats.reserve(grids.size());
    for (const auto& g : grids) mats.push_back(centered_matrix(g.points));
    return weighted_statistic(mats, weights, &perms);
}

void write_decomposition_csv(const std::string& path, const RjdcovResult& result,
                             const WeightScheme& weights, int r) {
    const auto coef = weights.by_size(r);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "subset,size,rdcov2,weight,contribution\n";
    char buf[96];
    for (const auto& stat : result.decomposition) {
        std::string label;
        for (std::size_t k = 0; k < stat.subset.size(); ++k) {
            if (k) label += '+';
            label += std::to_string(stat.subset[k] + 1);
        }
        const double w = coef[stat.subset.size()];
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g", stat.value, w, w * stat.value);
        out << label << ',' << stat.subset.size() << ',' << buf << "\n";
    }
}

}  // namespace rjdcov
