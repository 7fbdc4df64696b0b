#include "rjdcov/clt.hpp"

#include <cmath>
#include <stdexcept>

#include "rjdcov/errors.hpp"
#include "rjdcov/ks.hpp"
#include "rjdcov/parallel.hpp"
#include "rjdcov/rng.hpp"

namespace rjdcov {

namespace {

std::size_t total_size(int order, int n) {
    std::size_t size = 1;
    for (int k = 0; k < order; ++k) size *= static_cast<std::size_t>(n);
    return size;
}

std::size_t flat_index(int order, int n, const std::vector<int>& idx) {
    if (static_cast<int>(idx.size()) != order)
        throw SizeMismatch("tensor index order mismatch");
    std::size_t f = 0;
    for (int k = 0; k < order; ++k) {
        if (idx[static_cast<std::size_t>(k)] < 0 || idx[static_cast<std::size_t>(k)] >= n)
            throw SizeMismatch("tensor index out of range");
        f = f * static_cast<std::size_t>(n) + static_cast<std::size_t>(idx[static_cast<std::size_t>(k)]);
    }
    return f;
}

/// Subtracts the mean over one axis from every slice along that axis.
void remove_axis_mean(std::vector<double>& a, int order, int n, int axis) {
    std::size_t stride = 1;
    for (int k = axis + 1; k < order; ++k) stride *= static_cast<std::size_t>(n);
    const std::size_t block = stride * static_cast<std::size_t>(n);
    const std::size_t total = total_size(order, n);
    for (std::size_t base = 0; base < total; base += block) {
        for (std::size_t off = 0; off < stride; ++off) {
            double mean = 0.0;
            for (int i = 0; i < n; ++i)
                mean += a[base + off + static_cast<std::size_t>(i) * stride];
            mean /= static_cast<double>(n);
            for (int i = 0; i < n; ++i)
                a[base + off + static_cast<std::size_t>(i) * stride] -= mean;
        }
    }
}

}  // namespace

Tensor Tensor::zeros(int order, int n) {
    Tensor t;
    t.order = order;
    t.n = n;
    t.entries.assign(total_size(order, n), 0.0);
    return t;
}

double& Tensor::at(const std::vector<int>& idx) { return entries[flat_index(order, n, idx)]; }

std::size_t CenteredTensor::flat(const std::vector<int>& idx) const {
    return flat_index(order, n, idx);
}

double& CenteredTensor::at(const std::vector<int>& idx) { return entries[flat(idx)]; }

double CenteredTensor::at(const std::vector<int>& idx) const { return entries[flat(idx)]; }

double CenteredTensor::k1() const {
    double max_abs = 0.0;
    for (double v : entries) max_abs = std::max(max_abs, std::abs(v));
    return max_abs * std::sqrt(static_cast<double>(n));
}

double CenteredTensor::sum_squares() const {
    double s = 0.0;
    for (double v : entries) s += v * v;
    return s;
}

CenteredTensor center_tensor(const Tensor& raw) {
    if (raw.order < 2) throw SizeMismatch("center_tensor: order must be >= 2");
    if (raw.n < 2) throw SizeMismatch("center_tensor: n must be >= 2");
    CenteredTensor out;
    out.order = raw.order;
    out.n = raw.n;
    out.entries = raw.entries;
    for (int axis = 0; axis < raw.order; ++axis)
        remove_axis_mean(out.entries, raw.order, raw.n, axis);
    return out;
}

double combinatorial_sum(const CenteredTensor& tensor,
                         const std::vector<std::vector<int>>& perms) {
    if (static_cast<int>(perms.size()) != tensor.order - 1)
        throw SizeMismatch("combinatorial_sum: need order-1 permutations");
    for (const auto& p : perms)
        if (static_cast<int>(p.size()) != tensor.n)
            throw SizeMismatch("combinatorial_sum: permutation length != n");

    double total = 0.0;
    std::vector<int> idx(static_cast<std::size_t>(tensor.order));
    for (int i = 0; i < tensor.n; ++i) {
        idx[0] = i;
        for (int k = 1; k < tensor.order; ++k)
            idx[static_cast<std::size_t>(k)] =
                perms[static_cast<std::size_t>(k) - 1][static_cast<std::size_t>(i)];
        total += tensor.at(idx);
    }
    return total;
}

double variance_formula(const CenteredTensor& tensor) {
    if (tensor.order != 3)
        throw SizeMismatch("variance_formula: closed form implemented for order 3");
    const double n = static_cast<double>(tensor.n);
    return (n - 2.0) / (n * (n - 1.0) * (n - 1.0)) * tensor.sum_squares();
}

CltReport normality_diagnostic(const CenteredTensor& tensor, int draws, std::uint64_t seed,
                               double k2) {
    if (draws < 1) throw SizeMismatch("normality_diagnostic: draws must be >= 1");
    const double floor =
        k2 * std::pow(static_cast<double>(tensor.n), static_cast<double>(tensor.order - 1));
    if (!(tensor.sum_squares() >= floor) || variance_formula(tensor) <= 0.0)
        throw DegenerateVariance("normality_diagnostic: tensor variance is degenerate");

    CltReport report;
    report.n = tensor.n;
    report.draws = draws;
    report.analytic_var = variance_formula(tensor);

    std::vector<double> values(static_cast<std::size_t>(draws));
    parallel_for(static_cast<std::size_t>(draws), [&](std::size_t b) {
        Rng rng = Rng::stream(seed, {4, static_cast<std::uint64_t>(b)});
        std::vector<std::vector<int>> perms(static_cast<std::size_t>(tensor.order) - 1);
        for (auto& p : perms) p = rng.permutation(tensor.n);
        values[b] = combinatorial_sum(tensor, perms);
    });

    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(draws);
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    report.empirical_var = var / static_cast<double>(draws - 1);

    const double sd = std::sqrt(report.analytic_var);
    std::vector<double> standardized(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) standardized[i] = values[i] / sd;
    const KsResult ks = ks_test(standardized, [](double x) { return normal_cdf(x); });
    report.ks_statistic = ks.statistic;
    report.ks_pvalue = ks.p_value;
    return report;
}

}  // namespace rjdcov
