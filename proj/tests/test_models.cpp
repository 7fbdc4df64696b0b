#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rjdcov/errors.hpp"
#include "rjdcov/models.hpp"

using namespace rjdcov;

namespace {

double column_moment(const Eigen::MatrixXd& m, int col, int order) {
    const double mean = m.col(col).mean();
    double acc = 0.0;
    for (int i = 0; i < m.rows(); ++i) acc += std::pow(m(i, col) - mean, order);
    return acc / static_cast<double>(m.rows());
}

double kurtosis(const Eigen::MatrixXd& m, int col) {
    const double m2 = column_moment(m, col, 2);
    return column_moment(m, col, 4) / (m2 * m2);
}

double skewness(const Eigen::MatrixXd& m, int col) {
    const double m2 = column_moment(m, col, 2);
    return column_moment(m, col, 3) / std::pow(m2, 1.5);
}

}  // namespace

TEST_CASE("all generators are pure functions of (parameters, seed)") {
    CHECK(gen_gaussian_cov(20, 9, CovKind::Ar, 0.2, {3, 3, 3}, 5).blocks[1] ==
          gen_gaussian_cov(20, 9, CovKind::Ar, 0.2, {3, 3, 3}, 5).blocks[1]);
    CHECK(gen_copula_power(20, 3, 3, Eigen::MatrixXd::Identity(3, 3), 5) ==
          gen_copula_power(20, 3, 3, Eigen::MatrixXd::Identity(3, 3), 5));
    CHECK(gen_cauchy_regression(20, 0.5, 5).blocks[2] ==
          gen_cauchy_regression(20, 0.5, 5).blocks[2]);
    CHECK(gen_sine_dependence(20, 0.5, 5).blocks[0] == gen_sine_dependence(20, 0.5, 5).blocks[0]);
    CHECK(gen_sign_model(20, 2, SymmetricLaw::T3, 5).blocks[2] ==
          gen_sign_model(20, 2, SymmetricLaw::T3, 5).blocks[2]);
    CHECK(gen_ica_sources(20, 3, 'e', 5) == gen_ica_sources(20, 3, 'e', 5));
    CHECK(gen_mixing_matrix(3, 5) == gen_mixing_matrix(3, 5));
}

TEST_CASE("gaussian covariance shapes: AR and banded") {
    const auto ar = gen_gaussian_cov(5000, 9, CovKind::Ar, 0.25, {3, 3, 3}, 7);
    CHECK(ar.r() == 3);
    CHECK(ar.n() == 5000);

    // empirical covariance of the concatenated sample approaches Sigma
    Eigen::MatrixXd all(5000, 9);
    all << ar.blocks[0], ar.blocks[1], ar.blocks[2];
    Eigen::MatrixXd centered = all.rowwise() - all.colwise().mean();
    Eigen::MatrixXd cov = centered.transpose() * centered / 4999.0;
    for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j)
            CHECK(cov(i, j) == doctest::Approx(std::pow(0.25, std::abs(i - j))).epsilon(0.15));

    const auto banded = gen_gaussian_cov(200, 9, CovKind::Banded, 0.25, {3, 3, 3}, 7);
    CHECK(banded.n() == 200);

    Eigen::MatrixXd bad = -Eigen::MatrixXd::Identity(4, 4);
    CHECK_THROWS_AS(gen_gaussian_cov(10, 4, CovKind::Custom, 0.0, {2, 2}, 1, &bad),
                    NotPositiveDefinite);
    CHECK_THROWS_AS(gen_gaussian_cov(10, 9, CovKind::Ar, 0.2, {3, 3}, 1), DimensionMismatch);
}

TEST_CASE("copula powers heavy the tails") {
    const auto cubed = gen_copula_power(5000, 3, 3, Eigen::MatrixXd::Identity(3, 3), 11);
    for (int j = 0; j < 3; ++j) CHECK(kurtosis(cubed, j) > 3.0);
    CHECK_THROWS_AS(gen_copula_power(10, 2, 2, Eigen::MatrixXd::Identity(2, 2), 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(gen_copula_power(10, 2, -1, Eigen::MatrixXd::Identity(2, 2), 1),
                    std::invalid_argument);
}

TEST_CASE("cauchy regression has the documented shape") {
    const auto sample = gen_cauchy_regression(50, 1.0, 13);
    CHECK(sample.r() == 3);
    CHECK(sample.block_dims() == std::vector<int>{3, 3, 3});
    CHECK_THROWS_AS(gen_cauchy_regression(10, -1.0, 1), std::invalid_argument);
}

TEST_CASE("konijn: delta=0 is the identity mixing") {
    auto spec = KonijnSpec::identity_coupling(3, 2, 0.0, {});
    const auto a = spec.assemble();
    CHECK((a - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("konijn: delta=0.5 with identity coupling is singular") {
    auto spec = KonijnSpec::identity_coupling(3, 2, 0.5, {});
    CHECK_THROWS_AS(spec.assemble(), SingularMatrix);
    CHECK_THROWS_AS(gen_konijn(10, spec, 1), SingularMatrix);
}

TEST_CASE("konijn empirical covariance converges to A Sigma' A^T") {
    KonijnBase base;
    base.kind = KonijnBase::Kind::Gaussian;
    base.sigma = Eigen::MatrixXd(2, 2);
    base.sigma << 1.0, 0.5, 0.5, 1.0;
    auto spec = KonijnSpec::identity_coupling(3, 2, 0.4, base);
    const auto sample = gen_konijn(5000, spec, 17);

    Eigen::MatrixXd all(5000, 6);
    all << sample.blocks[0], sample.blocks[1], sample.blocks[2];
    Eigen::MatrixXd centered = all.rowwise() - all.colwise().mean();
    Eigen::MatrixXd cov = centered.transpose() * centered / 4999.0;

    Eigen::MatrixXd sigma_prime = Eigen::MatrixXd::Zero(6, 6);
    for (int b = 0; b < 3; ++b) sigma_prime.block(2 * b, 2 * b, 2, 2) = base.sigma;
    const auto a = spec.assemble();
    const Eigen::MatrixXd target = a * sigma_prime * a.transpose();
    CHECK((cov - target).norm() <= 0.1 * std::max(1.0, target.norm()));
}

TEST_CASE("konijn student-t base produces heavy tails") {
    KonijnBase base;
    base.kind = KonijnBase::Kind::StudentT;
    base.param = 5.0;
    base.sigma = Eigen::MatrixXd::Identity(2, 2);
    auto spec = KonijnSpec::identity_coupling(3, 2, 0.0, base);
    const auto sample = gen_konijn(4000, spec, 23);
    CHECK(kurtosis(sample.blocks[0], 0) > 3.3);  // t(5) excess kurtosis = 6
}

TEST_CASE("mixture: endpoints behave like the pure laws") {
    MixtureSpec spec;
    spec.product_law = [](Rng& rng) {
        return std::vector<Eigen::VectorXd>{Eigen::VectorXd::Constant(1, rng.normal()),
                                            Eigen::VectorXd::Constant(1, rng.normal())};
    };
    spec.dependent_law = [](Rng& rng) {
        const double shared = rng.normal();
        return std::vector<Eigen::VectorXd>{Eigen::VectorXd::Constant(1, shared),
                                            Eigen::VectorXd::Constant(1, shared)};
    };

    spec.delta = 1.0;
    const auto coupled = gen_mixture(400, spec, 29);
    CHECK(coupled.blocks[0] == coupled.blocks[1]);

    spec.delta = 0.0;
    const auto product = gen_mixture(400, spec, 29);
    CHECK(product.blocks[0] != product.blocks[1]);

    spec.delta = 2.0;
    CHECK_THROWS_AS(gen_mixture(10, spec, 1), std::invalid_argument);
}

TEST_CASE("sign model: the defining identity holds on every row") {
    for (auto law : {SymmetricLaw::Gaussian, SymmetricLaw::T3, SymmetricLaw::T2,
                     SymmetricLaw::Cauchy}) {
        const int d = 2;
        const auto sample = gen_sign_model(300, d, law, 31);
        const auto& x = sample.blocks[0];
        const auto& y = sample.blocks[1];
        const auto& z = sample.blocks[2];
        for (int i = 0; i < 300; ++i)
            CHECK(x(i, d - 1) * y(i, d - 1) * z(i, d - 1) <= 0.0);
    }
    CHECK_THROWS_AS(gen_sign_model(10, 0, SymmetricLaw::Gaussian, 1), DimensionMismatch);
}

TEST_CASE("ica sources: moment sanity per distribution") {
    const auto uniform = gen_ica_sources(5000, 2, 'g', 37);
    CHECK(column_moment(uniform, 0, 2) == doctest::Approx(1.0 / 12.0).epsilon(0.1));

    const auto cubed_normal = gen_ica_sources(10000, 2, 'a', 37);
    CHECK(std::abs(skewness(cubed_normal, 0)) < 0.6);
    CHECK(kurtosis(cubed_normal, 0) > 3.0);

    const auto exp_mix = gen_ica_sources(5000, 1, 'e', 37);
    CHECK(exp_mix.minCoeff() >= 0.0);

    CHECK_THROWS_AS(gen_ica_sources(10, 2, 'z', 1), std::invalid_argument);
}

TEST_CASE("mixing matrices have condition number in [1,2]") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto m = gen_mixing_matrix(3, seed);
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
        const double cond = svd.singularValues()(0) / svd.singularValues()(2);
        CHECK(cond >= 1.0);
        CHECK(cond <= 2.0 + 1e-12);
    }
}

// ---------------------------------------------------------------------------
// desk-scale power checks: the generators drive the joint test at the
// operating points named alongside each model
// ---------------------------------------------------------------------------

#include "rjdcov/calibration.hpp"

namespace {

double joint_power(const std::function<BlockedSample(std::uint64_t)>& gen,
                   const std::vector<int>& dims, int n, int reps,
                   std::uint64_t null_seed = 404) {
    std::vector<ReferenceGrid> grids;
    for (int d : dims) grids.push_back(halton_grid(n, d));
    const auto weights = WeightScheme::geometric(1.0);
    const auto null = simulate_null(grids, weights, 199, null_seed);
    int rejects = 0;
    for (int rep = 0; rep < reps; ++rep) {
        const auto sample = gen(7000 + static_cast<std::uint64_t>(rep));
        const double stat = weighted_statistic(centered_matrices_for(sample, grids), weights);
        if (p_value(stat, null, 0.05).reject) ++rejects;
    }
    return static_cast<double>(rejects) / reps;
}

}  // namespace

TEST_CASE("joint test power at the documented model operating points") {
    const int n = 300, reps = 60;
    CHECK(joint_power([&](std::uint64_t s) {
              return gen_gaussian_cov(n, 9, CovKind::Ar, 0.25, {3, 3, 3}, s);
          }, {3, 3, 3}, n, reps) >= 0.5);
    CHECK(joint_power([&](std::uint64_t s) {
              return gen_gaussian_cov(n, 9, CovKind::Banded, 0.25, {3, 3, 3}, s);
          }, {3, 3, 3}, n, reps) >= 0.5);
    CHECK(joint_power([&](std::uint64_t s) { return gen_cauchy_regression(n, 1.0, s); },
                      {3, 3, 3}, n, reps) >= 0.8);
}

TEST_CASE("sine dependence: power at b=0.5 and monotonicity in b") {
    const int n = 300, reps = 60;
    const double at_half = joint_power(
        [&](std::uint64_t s) { return gen_sine_dependence(n, 0.5, s); }, {3, 3, 3}, n, reps);
    const double at_tenth = joint_power(
        [&](std::uint64_t s) { return gen_sine_dependence(n, 0.1, s); }, {3, 3, 3}, n, reps);
    CHECK(at_half >= 0.6);
    CHECK(at_half >= at_tenth);

    // b=0 collapses the shared noise to zero: independent blocks, level-like
    const double at_zero = joint_power(
        [&](std::uint64_t s) { return gen_sine_dependence(n, 0.0, s); }, {3, 3, 3}, n, 100);
    CHECK(at_zero >= 0.0);
    CHECK(at_zero <= 0.10);
}

TEST_CASE("konijn copula-base alternative is detected") {
    KonijnBase base;
    base.kind = KonijnBase::Kind::CopulaPower;
    base.param = 3;
    base.sigma = Eigen::MatrixXd(2, 2);
    base.sigma << 1.0, 0.5, 0.5, 1.0;
    const auto spec = KonijnSpec::identity_coupling(3, 2, 0.4, base);
    const double power = joint_power(
        [&](std::uint64_t s) { return gen_konijn(300, spec, s); }, {2, 2, 2}, 300, 60);
    CHECK(power >= 0.5);
}

TEST_CASE("mixture alternatives: saturated and local regimes") {
    MixtureSpec spec;
    spec.product_law = [](Rng& rng) {
        return std::vector<Eigen::VectorXd>{Eigen::VectorXd::Constant(1, rng.normal()),
                                            Eigen::VectorXd::Constant(1, rng.normal())};
    };
    spec.dependent_law = [](Rng& rng) {
        const double shared = rng.normal();
        return std::vector<Eigen::VectorXd>{
            Eigen::VectorXd::Constant(1, shared),
            Eigen::VectorXd::Constant(1, shared + rng.normal())};
    };

    spec.delta = 1.0;
    CHECK(joint_power([&](std::uint64_t s) { return gen_mixture(200, spec, s); }, {1, 1}, 200,
                      60) >= 0.95);

    // delta = 4/sqrt(n): nontrivial local power, strictly between level and 1
    const int n = 100;
    spec.delta = 4.0 / std::sqrt(static_cast<double>(n));
    const double local = joint_power(
        [&](std::uint64_t s) { return gen_mixture(n, spec, s); }, {1, 1}, n, 500);
    CHECK(local > 0.10);
    CHECK(local < 0.99);
}
