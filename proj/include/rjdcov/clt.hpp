#pragma once

#include <cstdint>
#include <vector>

namespace rjdcov {

/// Dense order-r tensor with side length n, all axis-slice sums zero.
struct CenteredTensor {
    int order = 0;
    int n = 0;
    std::vector<double> entries;  // row-major, last axis fastest

    double& at(const std::vector<int>& idx);
    double at(const std::vector<int>& idx) const;
    std::size_t flat(const std::vector<int>& idx) const;

    /// Recorded bound constant: max |entry| * sqrt(n).
    double k1() const;
    double sum_squares() const;
};

/// Raw tensor container before centering.
struct Tensor {
    int order = 0;
    int n = 0;
    std::vector<double> entries;

    static Tensor zeros(int order, int n);
    double& at(const std::vector<int>& idx);
};

/// Projects onto the space of tensors with zero axis-slice sums by removing
/// the per-axis means (the averaging projectors commute, so the sequential
/// sweep equals the inclusion-exclusion formula). Idempotent and linear.
CenteredTensor center_tensor(const Tensor& raw);

/// C_n = sum_i a_{i, pi_1(i), ..., pi_{r-1}(i)}.
double combinatorial_sum(const CenteredTensor& tensor,
                         const std::vector<std::vector<int>>& perms);

/// Closed form Var[C_n] = (n-2)/(n (n-1)^2) * sum a^2 for order-3 tensors.
double variance_formula(const CenteredTensor& tensor);

struct CltReport {
    double ks_statistic = 0.0;
    double ks_pvalue = 0.0;
    double empirical_var = 0.0;
    double analytic_var = 0.0;
    int n = 0;
    int draws = 0;
};

/// Monte-Carlo normality diagnostic: standardized C_n draws against N(0,1)
/// by Kolmogorov-Smirnov. Requires a nondegenerate tensor: throws
/// DegenerateVariance when sum a^2 < k2 * n^{r-1}.
CltReport normality_diagnostic(const CenteredTensor& tensor, int draws, std::uint64_t seed,
                               double k2 = 1e-12);

}  // namespace rjdcov
