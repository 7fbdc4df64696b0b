#include "rjdcov/hypothesis.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace rjdcov {

namespace {

using nlohmann::json;

std::vector<ReferenceGrid> grids_for(const std::vector<int>& dims, int n,
                                     const TestOptions& options) {
    std::vector<ReferenceGrid> grids;
    grids.reserve(dims.size());
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (options.grid_kind == GridKind::Halton)
            grids.push_back(halton_grid(n, dims[i]));
        else
            grids.push_back(iid_uniform_grid(n, dims[i], options.grid_seed + i));
    }
    return grids;
}

NullDistribution null_for(const std::vector<ReferenceGrid>& grids, const WeightScheme& weights,
                          int B, std::uint64_t seed, const TestOptions& options) {
    std::string memo_key;
    if (options.memo) {
        memo_key = make_null_key(grids, weights, B, seed).canonical();
        auto it = options.memo->find(memo_key);
        if (it != options.memo->end()) return it->second;
    }
    NullDistribution null = options.cache ? options.cache->get_or_simulate(grids, weights, B, seed)
                                          : simulate_null(grids, weights, B, seed);
    if (options.memo) options.memo->emplace(memo_key, null);
    return null;
}

void validate_test_inputs(const BlockedSample& sample, double alpha, int B) {
    if (sample.n() < 2) throw SizeMismatch("test: need n >= 2");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("test: alpha must be in (0,1)");
    if (B < 1) throw SizeMismatch("test: B must be >= 1");
}

WeightScheme pair_only_weights(int r) {
    std::vector<double> w(static_cast<std::size_t>(r) - 1, 0.0);
    w[0] = 1.0;
    return WeightScheme::explicit_weights(w);
}

json subset_json(const SubsetStatistic& stat) {
    json j;
    json s = json::array();
    for (int b : stat.subset) s.push_back(b + 1);
    j["S"] = s;
    j["rdcov2"] = stat.value;
    return j;
}

TestReport run_test(TestKind kind, const BlockedSample& sample, const std::vector<int>& use_blocks,
                    const WeightScheme& weights, double alpha, int B, std::uint64_t seed,
                    const TestOptions& options) {
    validate_test_inputs(sample, alpha, B);

    std::vector<Eigen::MatrixXd> blocks;
    std::vector<int> dims;
    for (int b : use_blocks) {
        blocks.push_back(sample.blocks[static_cast<std::size_t>(b)]);
        dims.push_back(static_cast<int>(blocks.back().cols()));
    }
    const int n = sample.n();
    const auto grids = grids_for(dims, n, options);

    BlockedSample view(blocks);
    const auto mats = centered_matrices_for(view, grids);

    TestReport report;
    report.kind = kind;
    report.n = n;
    report.dims = sample.block_dims();
    report.alpha = alpha;
    report.B = B;
    report.seed = seed;
    report.grid_kind = options.grid_kind == GridKind::Halton ? "halton" : "iid-uniform";
    report.statistic = weighted_statistic(mats, weights);

    switch (kind) {
        case TestKind::Joint:
            for (const auto& subset : enumerate_subsets(view.r()))
                report.decomposition.push_back(rdcov_subset(mats, subset));
            break;
        case TestKind::PairwiseAggregate:
            for (int i = 0; i < view.r(); ++i)
                for (int j = i + 1; j < view.r(); ++j)
                    report.decomposition.push_back(rdcov_subset(mats, {i, j}));
            break;
        case TestKind::Subset: {
            std::vector<int> all(use_blocks.size());
            std::iota(all.begin(), all.end(), 0);
            SubsetStatistic stat = rdcov_subset(mats, all);
            stat.subset = use_blocks;  // report original block ids
            report.decomposition.push_back(stat);
            break;
        }
    }

    const auto null = null_for(grids, weights, B, seed, options);
    const auto cal = p_value(report.statistic, null, alpha);
    report.p_value = cal.p_value;
    report.rank_R = cal.rank_R;
    report.cutoff = cal.cutoff;
    report.reject = cal.reject;
    return report;
}

}  // namespace

TestReport test_joint(const BlockedSample& sample, const WeightScheme& weights, double alpha,
                      int B, std::uint64_t seed, const TestOptions& options) {
    if (sample.r() > options.max_r)
        throw SizeMismatch("test_joint: r exceeds max_r cap");
    std::vector<int> all(static_cast<std::size_t>(sample.r()));
    std::iota(all.begin(), all.end(), 0);
    return run_test(TestKind::Joint, sample, all, weights, alpha, B, seed, options);
}

TestReport test_pairwise_aggregate(const BlockedSample& sample, double alpha, int B,
                                   std::uint64_t seed, const TestOptions& options) {
    std::vector<int> all(static_cast<std::size_t>(sample.r()));
    std::iota(all.begin(), all.end(), 0);
    return run_test(TestKind::PairwiseAggregate, sample, all, pair_only_weights(sample.r()), alpha,
                    B, seed, options);
}

TestReport test_subset(const BlockedSample& sample, const std::vector<int>& subset, double alpha,
                       int B, std::uint64_t seed, const TestOptions& options) {
    if (subset.size() < 2) throw SizeMismatch("test_subset: need |S| >= 2");
    for (int b : subset)
        if (b < 0 || b >= sample.r()) throw SizeMismatch("test_subset: block index out of range");
    std::vector<int> sorted = subset;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw SizeMismatch("test_subset: repeated block index");

    TestReport report = run_test(TestKind::Subset, sample, sorted, WeightScheme::geometric(0.0),
                                 alpha, B, seed, options);
    report.subset = sorted;
    report.note =
        "single-subset RdCov2 test; consistent for mutual independence of X_S only when the "
        "variables in S are (|S|-1)-independent";
    return report;
}

std::vector<double> bh_adjust(const std::vector<double>& p_values) {
    for (double p : p_values)
        if (!(p > 0.0 && p <= 1.0))
            throw std::invalid_argument("bh_adjust: p-values must lie in (0,1]");
    const std::size_t m = p_values.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });

    std::vector<double> adjusted(m);
    double running = 1.0;
    for (std::size_t k = m; k-- > 0;) {
        const double scaled =
            p_values[order[k]] * static_cast<double>(m) / static_cast<double>(k + 1);
        running = std::min(running, std::min(1.0, scaled));
        adjusted[order[k]] = running;
    }
    return adjusted;
}

StructureReport dependency_structure(const BlockedSample& sample, double alpha, int B,
                                     std::uint64_t seed, const TestOptions& options) {
    if (sample.r() < 3)
        throw SizeMismatch("dependency_structure: workflow requires r >= 3 blocks");
    validate_test_inputs(sample, alpha, B);

    StructureReport report;
    report.n = sample.n();
    report.dims = sample.block_dims();
    report.labels = sample.labels;
    report.alpha = alpha;
    report.B = B;
    report.seed = seed;
    report.grid_kind = options.grid_kind == GridKind::Halton ? "halton" : "iid-uniform";

    // Pairs and triples with equal dims share one universal null.
    std::map<std::string, NullDistribution> memo;
    TestOptions opts = options;
    if (!opts.memo) opts.memo = &memo;

    // Stage 1: all pairwise subset tests, BH-adjusted as one family.
    std::vector<double> pair_p;
    for (int i = 0; i < sample.r(); ++i) {
        for (int j = i + 1; j < sample.r(); ++j) {
            const auto t = test_subset(sample, {i, j}, alpha, B, seed, opts);
            report.pairs.push_back({i, j, t.p_value, 1.0, false});
            pair_p.push_back(t.p_value);
        }
    }
    const auto pair_adj = bh_adjust(pair_p);
    std::map<std::pair<int, int>, bool> pair_dependent;
    for (std::size_t k = 0; k < report.pairs.size(); ++k) {
        report.pairs[k].p_adjusted = pair_adj[k];
        report.pairs[k].dependent = pair_adj[k] <= alpha;
        pair_dependent[{report.pairs[k].i, report.pairs[k].j}] = report.pairs[k].dependent;
    }

    // Stage 2: third-order tests on triples whose three pairs were all
    // accepted; BH within the triple family.
    std::vector<double> triple_p;
    for (int i = 0; i < sample.r(); ++i) {
        for (int j = i + 1; j < sample.r(); ++j) {
            for (int k = j + 1; k < sample.r(); ++k) {
                if (pair_dependent[{i, j}] || pair_dependent[{i, k}] || pair_dependent[{j, k}])
                    continue;
                const auto t = test_subset(sample, {i, j, k}, alpha, B, seed, opts);
                report.triples.push_back({i, j, k, t.p_value, 1.0, false});
                triple_p.push_back(t.p_value);
            }
        }
    }
    if (!triple_p.empty()) {
        const auto triple_adj = bh_adjust(triple_p);
        for (std::size_t k = 0; k < report.triples.size(); ++k) {
            report.triples[k].p_adjusted = triple_adj[k];
            report.triples[k].dependent = triple_adj[k] <= alpha;
        }
    }
    return report;
}

std::string TestReport::to_json() const {
    json j;
    j["schema_version"] = schema_version;
    j["kind"] = test_kind_name(kind);
    if (kind == TestKind::Subset) {
        json s = json::array();
        for (int b : subset) s.push_back(b + 1);
        j["subset"] = s;
    }
    j["n"] = n;
    j["dims"] = dims;
    j["statistic"] = statistic;
    j["p_value"] = p_value;
    j["alpha"] = alpha;
    j["reject"] = reject;
    j["rank"] = rank_R;
    j["cutoff"] = cutoff;
    j["B"] = B;
    j["seed"] = seed;
    j["grid"] = grid_kind;
    json dec = json::array();
    for (const auto& stat : decomposition) dec.push_back(subset_json(stat));
    j["subsets"] = dec;
    if (!note.empty()) j["note"] = note;
    return j.dump(2);
}

std::string StructureReport::to_json() const {
    json j;
    j["schema_version"] = schema_version;
    j["kind"] = "structure";
    j["n"] = n;
    j["dims"] = dims;
    if (!labels.empty()) j["labels"] = labels;
    j["alpha"] = alpha;
    j["B"] = B;
    j["seed"] = seed;
    j["grid"] = grid_kind;

    json pair_list = json::array();
    json edges = json::array();
    for (const auto& p : pairs) {
        json e;
        e["blocks"] = {p.i + 1, p.j + 1};
        e["p_value"] = p.p_value;
        e["p_adjusted"] = p.p_adjusted;
        e["dependent"] = p.dependent;
        pair_list.push_back(e);
        if (p.dependent) edges.push_back({p.i + 1, p.j + 1});
    }
    j["pairwise"] = pair_list;
    j["edges"] = edges;

    json triple_list = json::array();
    json hyper = json::array();
    for (const auto& t : triples) {
        json e;
        e["blocks"] = {t.i + 1, t.j + 1, t.k + 1};
        e["p_value"] = t.p_value;
        e["p_adjusted"] = t.p_adjusted;
        e["dependent"] = t.dependent;
        triple_list.push_back(e);
        if (t.dependent) hyper.push_back({t.i + 1, t.j + 1, t.k + 1});
    }
    j["triples"] = triple_list;
    j["hyperedges"] = hyper;
    j["note"] =
        "pairwise stage BH-adjusted at level alpha; triples screened on all three pairs "
        "accepted, then BH-adjusted within the triple family at the same level";
    return j.dump(2);
}

std::string StructureReport::to_dot() const {
    std::ostringstream out;
    out << "graph dependency {\n";
    for (std::size_t i = 0; i < dims.size(); ++i) {
        out << "  b" << (i + 1);
        if (i < labels.size() && !labels[i].empty()) out << " [label=\"" << labels[i] << "\"]";
        out << ";\n";
    }
    for (const auto& p : pairs) {
        if (p.dependent) out << "  b" << (p.i + 1) << " -- b" << (p.j + 1) << ";\n";
    }
    int t_index = 0;
    for (const auto& t : triples) {
        if (!t.dependent) continue;
        ++t_index;
        const std::string attr = " [style=dashed, label=\"T" + std::to_string(t_index) + "\"]";
        out << "  b" << (t.i + 1) << " -- b" << (t.j + 1) << attr << ";\n";
        out << "  b" << (t.j + 1) << " -- b" << (t.k + 1) << attr << ";\n";
        out << "  b" << (t.i + 1) << " -- b" << (t.k + 1) << attr << ";\n";
    }
    out << "}\n";
    return out.str();
}

}  // namespace rjdcov
