#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rjdcov/jdcov.hpp"

namespace rjdcov {

/// Identity of a simulated null: everything the draws depend on. Two tests
/// whose statistics share (n, block dims, weights, grid kind, B, seed) share
/// one universal null distribution.
struct NullKey {
    int n = 0;
    std::vector<int> dims;
    std::vector<double> weights_by_size;  // canonical C_2..C_r (index = s)
    std::string grid_key;                 // per-block grid identities, joined
    int B = 0;
    std::uint64_t seed = 0;

    static constexpr int format_version = 1;

    std::string canonical() const;
    std::uint64_t hash() const;
    bool operator==(const NullKey& other) const { return canonical() == other.canonical(); }
};

/// B evaluations of the statistic on independently permuted reference grids;
/// the universal resampling null.
struct NullDistribution {
    NullKey key;
    std::vector<double> draws;
};

struct CalibrationResult {
    double statistic = 0.0;
    double p_value = 1.0;
    int rank_R = 0;      // 1 = larger than every draw
    double cutoff = 0.0;  // c_{n,B,alpha}
    bool reject = false;
};

NullKey make_null_key(const std::vector<ReferenceGrid>& grids, const WeightScheme& weights, int B,
                      std::uint64_t seed);

/// Draw b uses r fresh i.i.d. uniform permutations from stream {0, b} of
/// `seed`; the statistic is evaluated by permuting rows/columns of each
/// grid's precomputed centered matrix. Never sees data.
NullDistribution simulate_null(const std::vector<ReferenceGrid>& grids, const WeightScheme& weights,
                               int B, std::uint64_t seed);

/// Exact null: one draw per ordered tuple of permutations, (n!)^r total.
/// Only sensible for tiny n; guarded at 250k tuples.
NullDistribution exhaustive_null(const std::vector<ReferenceGrid>& grids,
                                 const WeightScheme& weights);

/// Smallest draw value v with #(draws > v)/B <= alpha.
double quantile_cutoff(const NullDistribution& null, double alpha);

/// Permutation p-value p = R/(B+1) where R = 1 + #(draws > statistic) and
/// each draw tied with the statistic counts with probability 1/2 (fair coin
/// from the dedicated tie-break stream {1} of the null's seed).
CalibrationResult p_value(double statistic, const NullDistribution& null, double alpha = 0.05);

/// Directory-backed store of null distributions, content-addressed by the
/// key hash. Writes are atomic (temp file + rename).
class NullCache {
  public:
    explicit NullCache(std::filesystem::path dir);

    std::filesystem::path path_for(const NullKey& key) const;
    void store(const NullDistribution& null) const;
    NullDistribution load(const NullKey& key) const;  // CacheMiss / ChecksumMismatch
    NullDistribution get_or_simulate(const std::vector<ReferenceGrid>& grids,
                                     const WeightScheme& weights, int B, std::uint64_t seed) const;

    const std::filesystem::path& dir() const { return dir_; }

  private:
    std::filesystem::path dir_;
};

}  // namespace rjdcov
