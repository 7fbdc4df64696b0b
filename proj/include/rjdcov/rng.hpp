#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <vector>

namespace rjdcov {

/// Deterministic, platform-independent random generator built on SplitMix64.
///
/// All randomized components of the library draw from named substreams
/// derived with `Rng::stream(seed, {ids...})`, so results are reproducible
/// across platforms and independent of scheduling.  The stream ids in use:
///
///   {0, b}        permutations of calibration draw b
///   {1}           p-value tie breaking
///   {2, rep}      synthetic data generation, replicate `rep`
///   {3, k}        ICA restart k
///   {4, b}        combinatorial-CLT permutation draw b
///
/// Distribution transforms (Box-Muller, inverse CDFs, Marsaglia-Tsang) are
/// implemented here rather than with <random>'s distributions, whose output
/// is implementation-defined.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
        Rng r(seed);
        for (std::uint64_t id : path) {
            r.state_ ^= id * 0x9E3779B97F4A7C15ULL;
            r.next_u64();
        }
        return r;
    }

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform on [0,1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on (0,1); safe as input to log/tan transforms.
    double uniform_open01() {
        double u;
        do {
            u = uniform01();
        } while (u <= 0.0);
        return u;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Unbiased integer in [0, bound) via rejection.
    std::uint64_t uniform_below(std::uint64_t bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            std::uint64_t v = next_u64();
            if (v >= threshold) return v % bound;
        }
    }

    bool coin() { return (next_u64() >> 63) != 0; }

    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const double u1 = uniform_open01();
        const double u2 = uniform01();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        cached_ = radius * std::sin(angle);
        has_cached_ = true;
        return radius * std::cos(angle);
    }

    double exponential(double rate) { return -std::log(uniform_open01()) / rate; }

    double cauchy() { return std::tan(std::numbers::pi * (uniform01() - 0.5)); }

    /// Gamma(shape, 1) by Marsaglia-Tsang squeeze; shape < 1 via the boost
    /// identity Gamma(a) = Gamma(a+1) * U^{1/a}.
    double gamma(double shape) {
        if (shape < 1.0) {
            const double u = uniform_open01();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform_open01();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    double chi_squared(double df) { return 2.0 * gamma(0.5 * df); }

    double student_t(double df) { return normal() / std::sqrt(chi_squared(df) / df); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// Uniform random permutation of {0,...,n-1}.
    std::vector<int> permutation(int n) {
        std::vector<int> p(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
        shuffle(p);
        return p;
    }

  private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace rjdcov
