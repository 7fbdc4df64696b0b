#include "rjdcov/reference_grid.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "rjdcov/errors.hpp"
#include "rjdcov/rng.hpp"

namespace rjdcov {

namespace {

bool is_prime(unsigned n) {
    if (n < 2) return false;
    if (n % 2 == 0) return n == 2;
    for (unsigned d = 3; d * d <= n; d += 2)
        if (n % d == 0) return false;
    return true;
}

std::vector<unsigned> first_primes(int count) {
    std::vector<unsigned> primes;
    primes.reserve(static_cast<std::size_t>(count));
    unsigned candidate = 2;
    while (static_cast<int>(primes.size()) < count) {
        if (is_prime(candidate)) primes.push_back(candidate);
        ++candidate;
    }
    return primes;
}

void require_shape(int n, int dim) {
    if (n < 1) throw SizeMismatch("reference grid: n must be >= 1");
    if (dim < 1) throw DimensionMismatch("reference grid: dim must be >= 1");
}

/// Distinctness check for the constructed grid (lexicographic sort + adjacent compare).
void check_distinct(const Eigen::MatrixXd& pts) {
    const int n = static_cast<int>(pts.rows());
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        for (int j = 0; j < pts.cols(); ++j) {
            if (pts(a, j) != pts(b, j)) return pts(a, j) < pts(b, j);
        }
        return false;
    });
    for (int i = 0; i + 1 < n; ++i) {
        if (pts.row(order[static_cast<std::size_t>(i)]) ==
            pts.row(order[static_cast<std::size_t>(i + 1)]))
            throw std::runtime_error("reference grid: points are not pairwise distinct");
    }
}

}  // namespace

double radical_inverse(std::uint64_t index, unsigned base) {
    const double inv = 1.0 / base;
    double factor = inv;
    double x = 0.0;
    while (index) {
        x += static_cast<double>(index % base) * factor;
        index /= base;
        factor *= inv;
    }
    return x;
}

ReferenceGrid halton_grid(int n, int dim) {
    require_shape(n, dim);
    if (dim > 8)
        std::fprintf(stderr,
                     "rjdcov: warning: unscrambled Halton in dimension %d > 8 may show "
                     "correlation artifacts\n",
                     dim);
    const auto bases = first_primes(dim);
    ReferenceGrid grid;
    grid.dim = dim;
    grid.kind = GridKind::Halton;
    grid.points.resize(n, dim);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < dim; ++j)
            grid.points(i, j) = radical_inverse(static_cast<std::uint64_t>(i) + 1,
                                                bases[static_cast<std::size_t>(j)]);
    return grid;
}

ReferenceGrid iid_uniform_grid(int n, int dim, std::uint64_t seed) {
    require_shape(n, dim);
    ReferenceGrid grid;
    grid.dim = dim;
    grid.kind = GridKind::IidUniform;
    grid.seed = seed;
    grid.points.resize(n, dim);
    Rng rng = Rng::stream(seed, {0x67726964ULL});  // "grid"
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < dim; ++j) grid.points(i, j) = rng.uniform01();
    check_distinct(grid.points);
    return grid;
}

std::string ReferenceGrid::key() const {
    std::string k = kind == GridKind::Halton ? "halton" : "iid:" + std::to_string(seed);
    return k + ":" + std::to_string(size()) + "x" + std::to_string(dim);
}

void ReferenceGrid::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "index";
    for (int j = 1; j <= dim; ++j) out << ",x" << j;
    out << "\n";
    char buf[32];
    for (int i = 0; i < size(); ++i) {
        out << (i + 1);
        for (int j = 0; j < dim; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", points(i, j));
            out << ',' << buf;
        }
        out << "\n";
    }
}

}  // namespace rjdcov
