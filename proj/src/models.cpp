#include "rjdcov/models.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>

#include "rjdcov/errors.hpp"

namespace rjdcov {

namespace {

constexpr std::uint64_t kModelStream = 2;

Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& sigma) {
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefinite("covariance matrix is not positive definite");
    return llt.matrixL();
}

Eigen::MatrixXd gaussian_matrix(Rng& rng, int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
}

/// Draws n rows of N(0, Sigma) given the Cholesky factor L.
Eigen::MatrixXd gaussian_rows(Rng& rng, int n, const Eigen::MatrixXd& chol_l) {
    return gaussian_matrix(rng, n, static_cast<int>(chol_l.rows())) * chol_l.transpose();
}

double signed_power(double x, int q) {
    double out = x;
    for (int k = 1; k < q; ++k) out *= x;
    return out;
}

BlockedSample split_blocks(const Eigen::MatrixXd& data, const std::vector<int>& block_split) {
    std::vector<Eigen::MatrixXd> blocks;
    int col = 0;
    for (int d : block_split) {
        if (d < 1 || col + d > data.cols())
            throw DimensionMismatch("block split does not partition the columns");
        blocks.push_back(data.middleCols(col, d));
        col += d;
    }
    if (col != data.cols()) throw DimensionMismatch("block split does not cover all columns");
    return BlockedSample(std::move(blocks));
}

}  // namespace

double draw_symmetric(Rng& rng, SymmetricLaw law) {
    switch (law) {
        case SymmetricLaw::Gaussian: return rng.normal();
        case SymmetricLaw::T3: return rng.student_t(3.0);
        case SymmetricLaw::T2: return rng.student_t(2.0);
        default: return rng.cauchy();
    }
}

BlockedSample gen_gaussian_cov(int n, int dim, CovKind kind, double rho,
                               const std::vector<int>& block_split, std::uint64_t seed,
                               const Eigen::MatrixXd* custom_sigma) {
    Eigen::MatrixXd sigma(dim, dim);
    switch (kind) {
        case CovKind::Ar:
            for (int i = 0; i < dim; ++i)
                for (int j = 0; j < dim; ++j) sigma(i, j) = std::pow(rho, std::abs(i - j));
            break;
        case CovKind::Banded:
            for (int i = 0; i < dim; ++i)
                for (int j = 0; j < dim; ++j) {
                    const int gap = std::abs(i - j);
                    sigma(i, j) = gap == 0 ? 1.0 : (gap <= 2 ? rho : 0.0);
                }
            break;
        case CovKind::Custom:
            if (!custom_sigma || custom_sigma->rows() != dim || custom_sigma->cols() != dim)
                throw DimensionMismatch("gen_gaussian_cov: custom sigma has wrong shape");
            sigma = *custom_sigma;
            break;
    }
    const Eigen::MatrixXd chol_l = cholesky_factor(sigma);
    Rng rng = Rng::stream(seed, {kModelStream, 0});
    return split_blocks(gaussian_rows(rng, n, chol_l), block_split);
}

Eigen::MatrixXd gen_copula_power(int n, int dim, int q, const Eigen::MatrixXd& sigma,
                                 std::uint64_t seed) {
    if (q < 1 || q % 2 == 0)
        throw std::invalid_argument("gen_copula_power: q must be a positive odd integer");
    if (sigma.rows() != dim || sigma.cols() != dim)
        throw DimensionMismatch("gen_copula_power: sigma has wrong shape");
    const Eigen::MatrixXd chol_l = cholesky_factor(sigma);
    Rng rng = Rng::stream(seed, {kModelStream, 1});
    Eigen::MatrixXd data = gaussian_rows(rng, n, chol_l);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < dim; ++j) data(i, j) = signed_power(data(i, j), q);
    return data;
}

BlockedSample gen_cauchy_regression(int n, double a, std::uint64_t seed) {
    if (a < 0) throw std::invalid_argument("gen_cauchy_regression: a must be nonnegative");
    Rng rng = Rng::stream(seed, {kModelStream, 2});
    std::vector<Eigen::MatrixXd> blocks(3, Eigen::MatrixXd(n, 3));
    for (int row = 0; row < n; ++row) {
        const double v = rng.cauchy();
        for (auto& block : blocks)
            for (int j = 0; j < 3; ++j) block(row, j) = rng.cauchy() + a * v;
    }
    return BlockedSample(std::move(blocks));
}

BlockedSample gen_sine_dependence(int n, double b, std::uint64_t seed) {
    if (b < 0) throw std::invalid_argument("gen_sine_dependence: b must be nonnegative");
    Rng rng = Rng::stream(seed, {kModelStream, 3});
    std::vector<Eigen::MatrixXd> blocks(3, Eigen::MatrixXd(n, 3));
    for (int row = 0; row < n; ++row) {
        const double v = std::sin(b * rng.cauchy());
        for (auto& block : blocks)
            for (int j = 0; j < 3; ++j) block(row, j) = rng.cauchy() + v;
    }
    return BlockedSample(std::move(blocks));
}

Eigen::MatrixXd KonijnSpec::assemble() const {
    const int r = static_cast<int>(dims.size());
    int d0 = 0;
    for (int d : dims) d0 += d;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d0, d0);
    int row = 0;
    for (int i = 0; i < r; ++i) {
        int col = 0;
        for (int j = 0; j < r; ++j) {
            if (i == j) {
                a.block(row, col, dims[i], dims[j]) =
                    (1.0 - delta) * Eigen::MatrixXd::Identity(dims[i], dims[i]);
            } else {
                const Eigen::MatrixXd& m = coupling[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                if (m.rows() != dims[i] || m.cols() != dims[j])
                    throw DimensionMismatch("KonijnSpec: coupling M_{i,j} has wrong shape");
                a.block(row, col, dims[i], dims[j]) = delta * m;
            }
            col += dims[j];
        }
        row += dims[i];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible()) throw SingularMatrix("KonijnSpec: A_delta is singular");
    return a;
}

KonijnSpec KonijnSpec::identity_coupling(int r, int d, double delta, KonijnBase base) {
    KonijnSpec spec;
    spec.dims.assign(static_cast<std::size_t>(r), d);
    spec.delta = delta;
    if (base.sigma.size() == 0) base.sigma = Eigen::MatrixXd::Identity(d, d);
    spec.bases.assign(static_cast<std::size_t>(r), base);
    spec.coupling.assign(static_cast<std::size_t>(r),
                         std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(r),
                                                      Eigen::MatrixXd::Identity(d, d)));
    return spec;
}

KonijnSpec KonijnSpec::local_scale(int r, int d, double h, int n, KonijnBase base) {
    return identity_coupling(r, d, h / std::sqrt(static_cast<double>(n)), std::move(base));
}

BlockedSample gen_konijn(int n, const KonijnSpec& spec, std::uint64_t seed) {
    const int r = static_cast<int>(spec.dims.size());
    if (static_cast<int>(spec.bases.size()) != r)
        throw SizeMismatch("gen_konijn: need one base sampler per block");
    const Eigen::MatrixXd a = spec.assemble();

    Rng rng = Rng::stream(seed, {kModelStream, 4});
    int d0 = 0;
    for (int d : spec.dims) d0 += d;

    Eigen::MatrixXd base(n, d0);
    int col = 0;
    for (int i = 0; i < r; ++i) {
        const auto& b = spec.bases[static_cast<std::size_t>(i)];
        const Eigen::MatrixXd chol_l = cholesky_factor(b.sigma);
        Eigen::MatrixXd block = gaussian_rows(rng, n, chol_l);
        switch (b.kind) {
            case KonijnBase::Kind::Gaussian: break;
            case KonijnBase::Kind::CopulaPower: {
                const int q = static_cast<int>(b.param);
                if (q < 1 || q % 2 == 0)
                    throw std::invalid_argument("gen_konijn: copula power must be odd");
                for (int u = 0; u < block.rows(); ++u)
                    for (int v = 0; v < block.cols(); ++v)
                        block(u, v) = signed_power(block(u, v), q);
                break;
            }
            case KonijnBase::Kind::StudentT: {
                if (b.param <= 0) throw std::invalid_argument("gen_konijn: t needs df > 0");
                for (int u = 0; u < block.rows(); ++u)
                    block.row(u) *= std::sqrt(b.param / rng.chi_squared(b.param));
                break;
            }
        }
        base.middleCols(col, spec.dims[static_cast<std::size_t>(i)]) = block;
        col += spec.dims[static_cast<std::size_t>(i)];
    }
    return split_blocks(base * a.transpose(), spec.dims);
}

BlockedSample gen_mixture(int n, const MixtureSpec& spec, std::uint64_t seed) {
    if (!(spec.delta >= 0.0 && spec.delta <= 1.0))
        throw std::invalid_argument("gen_mixture: delta must lie in [0,1]");
    if (!spec.product_law || !spec.dependent_law)
        throw std::invalid_argument("gen_mixture: both samplers are required");
    Rng rng = Rng::stream(seed, {kModelStream, 5});

    std::vector<Eigen::MatrixXd> blocks;
    for (int row = 0; row < n; ++row) {
        const bool from_g = rng.uniform01() < spec.delta;
        const auto obs = from_g ? spec.dependent_law(rng) : spec.product_law(rng);
        if (blocks.empty()) {
            for (const auto& v : obs)
                blocks.emplace_back(Eigen::MatrixXd(n, v.size()));
        }
        if (obs.size() != blocks.size())
            throw DimensionMismatch("gen_mixture: samplers disagree on block count");
        for (std::size_t i = 0; i < obs.size(); ++i) {
            if (obs[i].size() != blocks[i].cols())
                throw DimensionMismatch("gen_mixture: samplers disagree on block dims");
            blocks[i].row(row) = obs[i].transpose();
        }
    }
    return BlockedSample(std::move(blocks));
}

BlockedSample gen_sign_model(int n, int d, SymmetricLaw law, std::uint64_t seed) {
    if (d < 1) throw DimensionMismatch("gen_sign_model: d must be >= 1");
    Rng rng = Rng::stream(seed, {kModelStream, 6});
    Eigen::MatrixXd x(n, d), y(n, d), z(n, d);
    for (int row = 0; row < n; ++row) {
        for (int j = 0; j < d; ++j) x(row, j) = draw_symmetric(rng, law);
        for (int j = 0; j < d; ++j) y(row, j) = draw_symmetric(rng, law);
        for (int j = 0; j < d; ++j) z(row, j) = draw_symmetric(rng, law);
        if (x(row, d - 1) * y(row, d - 1) * z(row, d - 1) > 0) z(row, d - 1) = -z(row, d - 1);
    }
    return BlockedSample({std::move(x), std::move(y), std::move(z)});
}

Eigen::MatrixXd gen_ica_sources(int n, int r, char distribution_index, std::uint64_t seed) {
    Rng rng = Rng::stream(seed, {kModelStream, 7});
    auto two_gaussians = [&](double w1, double m1, double v1, double m2, double v2) {
        if (rng.uniform01() < w1) return m1 + std::sqrt(v1) * rng.normal();
        return m2 + std::sqrt(v2) * rng.normal();
    };
    auto draw = [&]() -> double {
        switch (distribution_index) {
            case 'a': return signed_power(rng.normal(), 3);
            case 'b': return signed_power(rng.normal(), 5);
            case 'c': return rng.gamma(5.0);
            case 'd': return rng.gamma(10.0);
            case 'e':
                return rng.uniform01() < 0.3 ? rng.exponential(1.0) : rng.exponential(5.0);
            case 'f': return two_gaussians(0.3, -2.0, 1.0, 2.0, 1.0);
            case 'g': return rng.uniform01();
            case 'h': return two_gaussians(0.7, -2.0, 3.0, 2.0, 1.0);
            case 'i': return two_gaussians(0.5, -2.0, 2.0, 2.0, 2.0);
            case 'j': return signed_power(two_gaussians(0.5, -2.0, 2.0, 2.0, 2.0), 3);
            case 'k': return signed_power(two_gaussians(0.5, -2.0, 2.0, 2.0, 2.0), 5);
            case 'l': return signed_power(two_gaussians(0.5, -2.0, 2.0, 2.0, 2.0), 7);
            default:
                throw std::invalid_argument("gen_ica_sources: unknown distribution index");
        }
    };
    Eigen::MatrixXd sources(n, r);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < r; ++j) sources(i, j) = draw();
    return sources;
}

Eigen::MatrixXd gen_mixing_matrix(int r, std::uint64_t seed) {
    Rng rng = Rng::stream(seed, {kModelStream, 8});
    for (;;) {
        const Eigen::MatrixXd qu =
            Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian_matrix(rng, r, r)).householderQ();
        const Eigen::MatrixXd qv =
            Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian_matrix(rng, r, r)).householderQ();
        Eigen::VectorXd sv(r);
        for (int i = 0; i < r; ++i) sv(i) = rng.uniform(1.0, 2.0);
        const Eigen::MatrixXd m = qu * sv.asDiagonal() * qv.transpose();
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
        const double cond = svd.singularValues()(0) / svd.singularValues()(r - 1);
        if (cond >= 1.0 && cond <= 2.0) return m;
    }
}

}  // namespace rjdcov
