#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>
#include <map>

#include "rjdcov/hypothesis.hpp"
#include "rjdcov/ks.hpp"
#include "rjdcov/models.hpp"
#include "rjdcov/rng.hpp"

using namespace rjdcov;

namespace {

BlockedSample gaussian_blocks(std::uint64_t seed, int n, int r, int d) {
    Rng rng = Rng::stream(seed, {2, 100});
    std::vector<Eigen::MatrixXd> blocks(static_cast<std::size_t>(r), Eigen::MatrixXd(n, d));
    for (auto& blk : blocks)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) blk(i, j) = rng.normal();
    return BlockedSample(std::move(blocks));
}

BlockedSample cauchy_blocks(std::uint64_t seed, int n, int r, int d) {
    Rng rng = Rng::stream(seed, {2, 101});
    std::vector<Eigen::MatrixXd> blocks(static_cast<std::size_t>(r), Eigen::MatrixXd(n, d));
    for (auto& blk : blocks)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) blk(i, j) = rng.cauchy();
    return BlockedSample(std::move(blocks));
}

}  // namespace

TEST_CASE("bh adjustment: hand-computed step-up") {
    const auto adj = bh_adjust({0.01, 0.02, 0.03});
    CHECK(adj[0] == doctest::Approx(0.03));
    CHECK(adj[1] == doctest::Approx(0.03));
    CHECK(adj[2] == doctest::Approx(0.03));

    CHECK(bh_adjust({0.2})[0] == doctest::Approx(0.2));

    const auto equal = bh_adjust({0.04, 0.04, 0.04, 0.04});
    for (double p : equal) CHECK(p == doctest::Approx(0.04));

    const auto mixed = bh_adjust({0.005, 0.9, 0.04});
    CHECK(mixed[0] == doctest::Approx(0.015));
    CHECK(mixed[1] == doctest::Approx(0.9));
    CHECK(mixed[2] == doctest::Approx(0.06));

    CHECK_THROWS_AS(bh_adjust({0.0, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(bh_adjust({1.5}), std::invalid_argument);
}

TEST_CASE("for r=2 the joint and pairwise-aggregate tests coincide") {
    auto sample = gaussian_blocks(11, 40, 2, 1);
    const auto joint =
        test_joint(sample, WeightScheme::explicit_weights({1.0}), 0.05, 49, 3);
    const auto pairwise = test_pairwise_aggregate(sample, 0.05, 49, 3);
    CHECK(joint.statistic == pairwise.statistic);
    CHECK(joint.p_value == pairwise.p_value);
}

TEST_CASE("joint test rejects an additive dependence") {
    // X_3 = X_1 + X_2 coordinatewise
    Rng rng = Rng::stream(13, {2, 102});
    const int n = 200;
    Eigen::MatrixXd x(n, 1), y(n, 1);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = rng.normal();
        y(i, 0) = rng.normal();
    }
    BlockedSample sample({x, y, x + y});
    const auto report = test_joint(sample, WeightScheme::geometric(1.0), 0.05, 99, 5);
    CHECK(report.reject);
    CHECK(report.decomposition.size() == 4);
}

TEST_CASE("pairwise aggregate has power against a dependent pair") {
    int rejects = 0;
    const int reps = 30;
    std::map<std::string, NullDistribution> memo;
    TestOptions options;
    options.memo = &memo;
    for (int rep = 0; rep < reps; ++rep) {
        Rng rng = Rng::stream(17, {2, static_cast<std::uint64_t>(rep)});
        const int n = 200;
        Eigen::MatrixXd x(n, 1), z(n, 1);
        for (int i = 0; i < n; ++i) {
            x(i, 0) = rng.normal();
            z(i, 0) = rng.normal();
        }
        BlockedSample sample({x, x, z});
        if (test_pairwise_aggregate(sample, 0.05, 99, 5, options).reject) ++rejects;
    }
    CHECK(static_cast<double>(rejects) / reps >= 0.95);
}

TEST_CASE("subset test on the sign model detects the triple") {
    const auto sample = gen_sign_model(200, 1, SymmetricLaw::Gaussian, 19);
    const auto report = test_subset(sample, {0, 1, 2}, 0.05, 99, 7);
    CHECK(report.reject);
    CHECK(report.note.find("|S|-1") != std::string::npos);

    CHECK_THROWS_AS(test_subset(sample, {0}, 0.05, 99, 7), SizeMismatch);
    CHECK_THROWS_AS(test_subset(sample, {0, 5}, 0.05, 99, 7), SizeMismatch);
}

TEST_CASE("alpha at the resolution limit cannot reject a middling statistic") {
    auto sample = gaussian_blocks(23, 60, 2, 1);
    const int B = 99;
    const auto report = test_joint(sample, WeightScheme::geometric(1.0), 1.0 / (B + 1), B, 9);
    if (report.rank_R > 1) CHECK_FALSE(report.reject);
}

TEST_CASE("monotone marginal transforms leave the report invariant") {
    Rng rng = Rng::stream(29, {2, 103});
    const int n = 80;
    Eigen::MatrixXd x(n, 1), y(n, 1);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = rng.normal();
        y(i, 0) = 0.6 * x(i, 0) + rng.normal();
    }
    BlockedSample raw({x, y});
    BlockedSample warped({x.array().exp().matrix(), (y.array() * 2.0 - 5.0).matrix()});
    const auto a = test_joint(raw, WeightScheme::geometric(1.0), 0.05, 49, 11);
    const auto b = test_joint(warped, WeightScheme::geometric(1.0), 0.05, 49, 11);
    CHECK(a.statistic == b.statistic);
    CHECK(a.p_value == b.p_value);
}

TEST_CASE("p-values are distribution-free across Gaussian and Cauchy nulls") {
    const int n = 80, reps = 120, B = 99;
    std::map<std::string, NullDistribution> memo;
    TestOptions options;
    options.memo = &memo;
    std::vector<double> p_gauss, p_cauchy;
    for (int rep = 0; rep < reps; ++rep) {
        auto g = gaussian_blocks(static_cast<std::uint64_t>(rep), n, 3, 1);
        auto c = cauchy_blocks(static_cast<std::uint64_t>(rep), n, 3, 1);
        p_gauss.push_back(
            test_joint(g, WeightScheme::geometric(1.0), 0.05, B, 5, options).p_value);
        p_cauchy.push_back(
            test_joint(c, WeightScheme::geometric(1.0), 0.05, B, 5, options).p_value);
    }
    const auto ks = ks_two_sample(p_gauss, p_cauchy);
    CHECK(ks.statistic < ks_two_sample_critical(0.01, p_gauss.size(), p_cauchy.size()));
}

TEST_CASE("p-values are super-uniform under independence") {
    const int n = 60, reps = 400, B = 79;
    std::map<std::string, NullDistribution> memo;
    TestOptions options;
    options.memo = &memo;
    std::vector<double> pvals;
    for (int rep = 0; rep < reps; ++rep) {
        auto sample = gaussian_blocks(static_cast<std::uint64_t>(rep) + 5000, n, 2, 1);
        pvals.push_back(
            test_joint(sample, WeightScheme::geometric(1.0), 0.05, B, 13, options).p_value);
    }
    for (double alpha : {0.01, 0.05, 0.1}) {
        int hits = 0;
        for (double p : pvals)
            if (p <= alpha) ++hits;
        const double rate = static_cast<double>(hits) / reps;
        const double wilson_slack = 2.5 * std::sqrt(alpha * (1 - alpha) / reps);
        CHECK(rate <= alpha + wilson_slack);
    }
}

TEST_CASE("dependency structure requires at least three blocks") {
    auto sample = gaussian_blocks(31, 30, 2, 1);
    CHECK_THROWS_AS(dependency_structure(sample, 0.05, 49, 3), SizeMismatch);
}

TEST_CASE("dependency structure finds an embedded sign-model triple") {
    // blocks: sign-model triple + one independent block
    const int n = 300;
    const auto triple = gen_sign_model(n, 1, SymmetricLaw::Gaussian, 37);
    Rng rng = Rng::stream(37, {2, 104});
    Eigen::MatrixXd extra(n, 1);
    for (int i = 0; i < n; ++i) extra(i, 0) = rng.normal();
    BlockedSample sample({triple.blocks[0], triple.blocks[1], triple.blocks[2], extra});

    const auto report = dependency_structure(sample, 0.05, 199, 17);
    REQUIRE(report.pairs.size() == 6);
    bool found = false;
    for (const auto& t : report.triples)
        if (t.i == 0 && t.j == 1 && t.k == 2 && t.dependent) found = true;
    CHECK(found);

    const auto dot = report.to_dot();
    CHECK(dot.find("graph dependency") != std::string::npos);
    const auto parsed = nlohmann::json::parse(report.to_json());
    CHECK(parsed["schema_version"] == 1);
    CHECK(parsed["pairwise"].size() == 6);
}

TEST_CASE("independent blocks rarely produce edges") {
    int clean = 0;
    const int reps = 20;
    std::map<std::string, NullDistribution> memo;
    TestOptions options;
    options.memo = &memo;
    for (int rep = 0; rep < reps; ++rep) {
        auto sample = gaussian_blocks(static_cast<std::uint64_t>(rep) + 900, 100, 4, 1);
        const auto report = dependency_structure(sample, 0.05, 99, 11, options);
        bool any_edge = false;
        for (const auto& p : report.pairs) any_edge = any_edge || p.dependent;
        for (const auto& t : report.triples) any_edge = any_edge || t.dependent;
        if (!any_edge) ++clean;
    }
    CHECK(static_cast<double>(clean) / reps >= 0.8);
}

TEST_CASE("reports serialize deterministically with a pinned schema") {
    auto sample = gaussian_blocks(41, 40, 3, 1);
    const auto a = test_joint(sample, WeightScheme::geometric(1.0), 0.05, 49, 21);
    const auto b = test_joint(sample, WeightScheme::geometric(1.0), 0.05, 49, 21);
    CHECK(a.to_json() == b.to_json());

    const auto parsed = nlohmann::json::parse(a.to_json());
    for (const char* key : {"schema_version", "kind", "n", "dims", "statistic", "p_value",
                            "alpha", "reject", "B", "seed", "grid", "subsets"})
        CHECK(parsed.contains(key));
    CHECK(parsed["kind"] == "joint");
    CHECK(parsed["subsets"].size() == 4);
}

TEST_CASE("subset test keeps level on independent blocks") {
    const int n = 100, reps = 200, B = 199;
    std::map<std::string, NullDistribution> memo;
    TestOptions options;
    options.memo = &memo;
    int rejects = 0;
    for (int rep = 0; rep < reps; ++rep) {
        auto sample = gaussian_blocks(static_cast<std::uint64_t>(rep) + 7100, n, 3, 1);
        if (test_subset(sample, {0, 1, 2}, 0.05, B, 3, options).reject) ++rejects;
    }
    const double rate = static_cast<double>(rejects) / reps;
    CHECK(rate >= 0.0);
    CHECK(rate <= 0.10);
}

TEST_CASE("joint test power against the additive triple") {
    const int n = 200, reps = 30, B = 199;
    std::map<std::string, NullDistribution> memo;
    TestOptions options;
    options.memo = &memo;
    int rejects = 0;
    for (int rep = 0; rep < reps; ++rep) {
        Rng rng = Rng::stream(7200, {2, static_cast<std::uint64_t>(rep)});
        Eigen::MatrixXd x(n, 1), y(n, 1);
        for (int i = 0; i < n; ++i) {
            x(i, 0) = rng.normal();
            y(i, 0) = rng.normal();
        }
        BlockedSample sample({x, y, x + y});
        if (test_joint(sample, WeightScheme::geometric(1.0), 0.05, B, 5, options).reject)
            ++rejects;
    }
    CHECK(static_cast<double>(rejects) / reps >= 0.95);
}
