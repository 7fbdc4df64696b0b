#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rjdcov/calibration.hpp"
#include "rjdcov/jdcov.hpp"

namespace rjdcov {

enum class TestKind { Joint, PairwiseAggregate, Subset };

inline const char* test_kind_name(TestKind k) {
    switch (k) {
        case TestKind::Joint: return "joint";
        case TestKind::PairwiseAggregate: return "pairwise-aggregate";
        default: return "subset";
    }
}

struct TestOptions {
    GridKind grid_kind = GridKind::Halton;
    std::uint64_t grid_seed = 0;        // for IidUniform grids
    const NullCache* cache = nullptr;   // optional persistent null store
    std::map<std::string, NullDistribution>* memo = nullptr;  // in-process null reuse
    int max_r = 12;
};

/// Everything a caller needs to interpret one test: the statistic, its
/// resampling p-value, the per-subset decomposition, and the calibration
/// metadata that makes the run reproducible.
struct TestReport {
    TestKind kind = TestKind::Joint;
    std::vector<int> subset;  // 0-based; filled for Subset tests
    int n = 0;
    std::vector<int> dims;
    double statistic = 0.0;
    double p_value = 1.0;
    double alpha = 0.05;
    bool reject = false;
    int rank_R = 0;
    double cutoff = 0.0;
    std::vector<SubsetStatistic> decomposition;
    int B = 0;
    std::uint64_t seed = 0;
    std::string grid_kind;
    std::string note;

    static constexpr int schema_version = 1;
    std::string to_json() const;
};

/// phi-tilde test of mutual independence of all r blocks: statistic
/// RJdCov2_n(X; C), resampling p-value from the matched universal null.
TestReport test_joint(const BlockedSample& sample, const WeightScheme& weights, double alpha,
                      int B, std::uint64_t seed, const TestOptions& options = {});

/// Aggregate pairwise test: sum over pairs of RdCov2_n(X_i, X_j), which is
/// the weighted statistic with C_2 = 1 and all higher weights zero.
TestReport test_pairwise_aggregate(const BlockedSample& sample, double alpha, int B,
                                   std::uint64_t seed, const TestOptions& options = {});

/// Single-subset test of RdCov2_n(X_S). Consistent for mutual independence
/// of X_S only under |S|-1-independence; the report carries that caveat.
TestReport test_subset(const BlockedSample& sample, const std::vector<int>& subset, double alpha,
                       int B, std::uint64_t seed, const TestOptions& options = {});

/// Benjamini-Hochberg step-up adjusted p-values (same order as the input).
std::vector<double> bh_adjust(const std::vector<double>& p_values);

struct PairResult {
    int i = 0, j = 0;  // 0-based blocks
    double p_value = 1.0;
    double p_adjusted = 1.0;
    bool dependent = false;
};

struct TripleResult {
    int i = 0, j = 0, k = 0;
    double p_value = 1.0;
    double p_adjusted = 1.0;
    bool dependent = false;
};

/// Output of the two-stage discovery workflow: BH-adjusted pairwise tests,
/// then third-order tests on triples whose pairs were all accepted (BH
/// within the triple family as well).
struct StructureReport {
    int n = 0;
    std::vector<int> dims;
    std::vector<std::string> labels;
    double alpha = 0.05;
    int B = 0;
    std::uint64_t seed = 0;
    std::string grid_kind;
    std::vector<PairResult> pairs;
    std::vector<TripleResult> triples;

    static constexpr int schema_version = 1;
    std::string to_json() const;
    std::string to_dot() const;
};

StructureReport dependency_structure(const BlockedSample& sample, double alpha, int B,
                                     std::uint64_t seed, const TestOptions& options = {});

}  // namespace rjdcov
