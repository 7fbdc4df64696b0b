#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "rjdcov/jdcov.hpp"
#include "rjdcov/rng.hpp"

namespace rjdcov {

enum class CovKind { Ar, Banded, Custom };

enum class SymmetricLaw { Gaussian, T3, T2, Cauchy };

/// Base sampler of one Konijn block before mixing.
struct KonijnBase {
    enum class Kind { Gaussian, CopulaPower, StudentT } kind = Kind::Gaussian;
    double param = 0.0;     // copula power q, or t degrees of freedom
    Eigen::MatrixXd sigma;  // within-block covariance (d_i x d_i)
};

/// Near-identity block mixing: A_delta has (1-delta) I_{d_i} on the diagonal
/// blocks and delta M_{i,j} off-diagonal. Invertibility is checked when the
/// matrix is assembled.
struct KonijnSpec {
    std::vector<int> dims;
    std::vector<std::vector<Eigen::MatrixXd>> coupling;  // coupling[i][j] = M_{i,j}, i != j
    double delta = 0.0;
    std::vector<KonijnBase> bases;

    Eigen::MatrixXd assemble() const;  // throws SingularMatrix if A_delta is singular

    /// Identical blocks with identity coupling; the configuration of the
    /// local-power experiments.
    static KonijnSpec identity_coupling(int r, int d, double delta, KonijnBase base);

    /// Local-alternative scaling delta = h / sqrt(n).
    static KonijnSpec local_scale(int r, int d, double h, int n, KonijnBase base);
};

/// Contaminated product law: with probability delta an observation comes
/// from the dependent sampler g, otherwise from the product-law sampler.
/// Samplers return one observation split into blocks.
struct MixtureSpec {
    double delta = 0.0;
    std::function<std::vector<Eigen::VectorXd>(Rng&)> product_law;
    std::function<std::vector<Eigen::VectorXd>(Rng&)> dependent_law;
};

/// N(0, Sigma) sample split into consecutive blocks. Sigma is AR
/// (sigma_ij = rho^|i-j|), banded (1 on the diagonal, rho within bandwidth 2,
/// 0 beyond), or caller-supplied.
BlockedSample gen_gaussian_cov(int n, int dim, CovKind kind, double rho,
                               const std::vector<int>& block_split, std::uint64_t seed,
                               const Eigen::MatrixXd* custom_sigma = nullptr);

/// Componentwise q-th power of a N(0, Sigma) draw; q must be a positive odd
/// integer so the map is continuous and strictly increasing.
Eigen::MatrixXd gen_copula_power(int n, int dim, int q, const Eigen::MatrixXd& sigma,
                                 std::uint64_t seed);

/// Cauchy regression: X_i = Z_i + a V with Z_i iid C(0,1) coordinates and a
/// shared scalar V ~ C(0,1) broadcast over all coordinates (r = 3, d_i = 3).
BlockedSample gen_cauchy_regression(int n, double a, std::uint64_t seed);

/// Sine dependence: same shape, V = sin(b W) with W ~ C(0,1), a fixed at 1.
BlockedSample gen_sine_dependence(int n, double b, std::uint64_t seed);

BlockedSample gen_konijn(int n, const KonijnSpec& spec, std::uint64_t seed);

BlockedSample gen_mixture(int n, const MixtureSpec& spec, std::uint64_t seed);

/// Pairwise-independent but jointly dependent triple: X, Y, Z have iid
/// F-coordinates; Z' flips the sign of its d-th coordinate whenever
/// X_d Y_d Z_d > 0.
BlockedSample gen_sign_model(int n, int d, SymmetricLaw law, std::uint64_t seed);

/// ICA source distributions (a)-(l): the index selects the marginal law of
/// the iid sources. Powered laws such as (a) N(0,1)^3 mean the k-th signed
/// power of one draw (x |-> x^k, odd k), not a product of draws; the others
/// are gammas, exponential/Gaussian mixtures, and Uniform(0,1).
Eigen::MatrixXd gen_ica_sources(int n, int r, char distribution_index, std::uint64_t seed);

/// Random mixing matrix with condition number in [1,2]: Gaussian matrices
/// orthogonalized by QR supply the singular bases, singular values drawn
/// uniformly from [1,2].
Eigen::MatrixXd gen_mixing_matrix(int r, std::uint64_t seed);

/// One draw from the symmetric scalar law.
double draw_symmetric(Rng& rng, SymmetricLaw law);

}  // namespace rjdcov
