#include "rjdcov/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "rjdcov/errors.hpp"
#include "rjdcov/parallel.hpp"
#include "rjdcov/rng.hpp"

namespace rjdcov {

namespace {

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void validate_grids(const std::vector<ReferenceGrid>& grids) {
    if (grids.size() < 2) throw SizeMismatch("calibration: need at least 2 block grids");
    const int n = grids.front().size();
    for (const auto& g : grids)
        if (g.size() != n) throw SizeMismatch("calibration: grids disagree on n");
}

}  // namespace

std::string NullKey::canonical() const {
    std::ostringstream out;
    out << "v" << format_version << "|n=" << n << "|dims=";
    for (std::size_t i = 0; i < dims.size(); ++i) out << (i ? "," : "") << dims[i];
    out << "|w=";
    for (std::size_t s = 2; s < weights_by_size.size(); ++s)
        out << (s > 2 ? "," : "") << format_double(weights_by_size[s]);
    out << "|grid=" << grid_key << "|B=" << B << "|seed=" << seed;
    return out.str();
}

std::uint64_t NullKey::hash() const { return fnv1a(canonical()); }

NullKey make_null_key(const std::vector<ReferenceGrid>& grids, const WeightScheme& weights, int B,
                      std::uint64_t seed) {
    validate_grids(grids);
    NullKey key;
    key.n = grids.front().size();
    for (const auto& g : grids) {
        key.dims.push_back(g.dim);
        key.grid_key += (key.grid_key.empty() ? "" : ";") + g.key();
    }
    key.weights_by_size = weights.by_size(static_cast<int>(grids.size()));
    key.B = B;
    key.seed = seed;
    return key;
}

NullDistribution simulate_null(const std::vector<ReferenceGrid>& grids, const WeightScheme& weights,
                               int B, std::uint64_t seed) {
    if (B < 1) throw SizeMismatch("simulate_null: B must be >= 1");
    validate_grids(grids);
    const int r = static_cast<int>(grids.size());
    const int n = grids.front().size();

    std::vector<CenteredDistanceMatrix> mats;
    mats.reserve(grids.size());
    for (const auto& g : grids) mats.push_back(centered_matrix(g.points));

    NullDistribution null;
    null.key = make_null_key(grids, weights, B, seed);
    null.draws.resize(static_cast<std::size_t>(B));
    // each draw owns substream {0, b}, so the result is schedule-independent
    parallel_for(static_cast<std::size_t>(B), [&](std::size_t b) {
        Rng rng = Rng::stream(seed, {0, static_cast<std::uint64_t>(b)});
        std::vector<std::vector<int>> perms(static_cast<std::size_t>(r));
        for (int i = 0; i < r; ++i) perms[static_cast<std::size_t>(i)] = rng.permutation(n);
        null.draws[b] = weighted_statistic(mats, weights, &perms);
    });
    return null;
}

NullDistribution exhaustive_null(const std::vector<ReferenceGrid>& grids,
                                 const WeightScheme& weights) {
    validate_grids(grids);
    const int r = static_cast<int>(grids.size());
    const int n = grids.front().size();

    double factorial = 1.0;
    for (int i = 2; i <= n; ++i) factorial *= i;
    const double tuple_count = std::pow(factorial, r);
    if (tuple_count > 250000.0)
        throw SizeMismatch("exhaustive_null: (n!)^r too large for enumeration");

    std::vector<CenteredDistanceMatrix> mats;
    for (const auto& g : grids) mats.push_back(centered_matrix(g.points));

    // All permutations of {0..n-1} in lexicographic order.
    std::vector<std::vector<int>> all_perms;
    std::vector<int> p(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
    do {
        all_perms.push_back(p);
    } while (std::next_permutation(p.begin(), p.end()));

    NullDistribution null;
    null.key = make_null_key(grids, weights, static_cast<int>(tuple_count), 0);
    null.key.grid_key += ";exhaustive";
    std::vector<std::size_t> choice(static_cast<std::size_t>(r), 0);
    std::vector<std::vector<int>> perms(static_cast<std::size_t>(r));
    for (;;) {
        for (int i = 0; i < r; ++i)
            perms[static_cast<std::size_t>(i)] = all_perms[choice[static_cast<std::size_t>(i)]];
        null.draws.push_back(weighted_statistic(mats, weights, &perms));
        int pos = r - 1;
        while (pos >= 0 && ++choice[static_cast<std::size_t>(pos)] == all_perms.size()) {
            choice[static_cast<std::size_t>(pos)] = 0;
            --pos;
        }
        if (pos < 0) break;
    }
    return null;
}

double quantile_cutoff(const NullDistribution& null, double alpha) {
    if (null.draws.empty()) throw SizeMismatch("quantile_cutoff: empty null distribution");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("quantile_cutoff: alpha must be in (0,1)");
    std::vector<double> sorted = null.draws;
    std::sort(sorted.begin(), sorted.end());
    const double B = static_cast<double>(sorted.size());
    // Scan ascending: the first value whose strictly-exceeding fraction is
    // <= alpha is the minimum of the admissible set.
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        const auto above = static_cast<double>(
            sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), sorted[k]));
        if (above / B <= alpha) return sorted[k];
    }
    return sorted.back();
}

CalibrationResult p_value(double statistic, const NullDistribution& null, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("p_value: alpha must be in (0,1)");
    Rng tie_rng = Rng::stream(null.key.seed, {1});
    int rank = 1;
    for (double draw : null.draws) {
        if (draw > statistic) {
            ++rank;
        } else if (draw == statistic) {
            if (tie_rng.coin()) ++rank;
        }
    }
    CalibrationResult result;
    result.statistic = statistic;
    result.rank_R = rank;
    result.p_value = static_cast<double>(rank) / (static_cast<double>(null.draws.size()) + 1.0);
    result.cutoff = quantile_cutoff(null, alpha);
    result.reject = result.p_value <= alpha;
    return result;
}

NullCache::NullCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::filesystem::path NullCache::path_for(const NullKey& key) const {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(key.hash()));
    return dir_ / (std::string(buf) + ".rjdcov-null");
}

void NullCache::store(const NullDistribution& null) const {
    std::string body;
    body.reserve(null.draws.size() * 24);
    for (double d : null.draws) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g\n", d);
        body += buf;
    }
    std::ostringstream out;
    out << "rjdcov-null v" << NullKey::format_version << "\n";
    out << "key " << null.key.canonical() << "\n";
    out << "draws " << null.draws.size() << "\n";
    out << body;
    out << "checksum " << fnv1a(body) << "\n";

    const auto target = path_for(null.key);
    const auto tmp = target.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write cache file " + tmp);
        f << out.str();
    }
    std::filesystem::rename(tmp, target);
}

NullDistribution NullCache::load(const NullKey& key) const {
    const auto target = path_for(key);
    std::ifstream f(target, std::ios::binary);
    if (!f) throw CacheMiss("no cache entry for key " + key.canonical());

    std::string line;
    if (!std::getline(f, line) || line != "rjdcov-null v" + std::to_string(NullKey::format_version))
        throw CacheMiss("cache entry has unsupported format: " + target.string());
    if (!std::getline(f, line) || line.rfind("key ", 0) != 0)
        throw ChecksumMismatch("cache entry missing key line: " + target.string());
    if (line.substr(4) != key.canonical())
        throw CacheMiss("cache entry key mismatch (hash collision): " + target.string());
    if (!std::getline(f, line) || line.rfind("draws ", 0) != 0)
        throw ChecksumMismatch("cache entry missing draw count: " + target.string());
    const auto count = static_cast<std::size_t>(std::strtoull(line.c_str() + 6, nullptr, 10));

    NullDistribution null;
    null.key = key;
    null.draws.reserve(count);
    std::string body;
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::getline(f, line))
            throw ChecksumMismatch("cache entry truncated: " + target.string());
        body += line + "\n";
        char* end = nullptr;
        const double v = std::strtod(line.c_str(), &end);
        if (end == line.c_str()) throw ChecksumMismatch("cache entry corrupt: " + target.string());
        null.draws.push_back(v);
    }
    if (!std::getline(f, line) || line.rfind("checksum ", 0) != 0)
        throw ChecksumMismatch("cache entry missing checksum: " + target.string());
    if (std::strtoull(line.c_str() + 9, nullptr, 10) != fnv1a(body))
        throw ChecksumMismatch("cache entry checksum mismatch: " + target.string());
    return null;
}

NullDistribution NullCache::get_or_simulate(const std::vector<ReferenceGrid>& grids,
                                            const WeightScheme& weights, int B,
                                            std::uint64_t seed) const {
    const NullKey key = make_null_key(grids, weights, B, seed);
    try {
        return load(key);
    } catch (const CacheMiss&) {
        NullDistribution null = simulate_null(grids, weights, B, seed);
        store(null);
        return null;
    }
}

}  // namespace rjdcov
