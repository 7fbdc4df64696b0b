// rjdcov command-line tool: independence tests, dependency-structure
// discovery, simulation studies, ICA fitting, and the combinatorial-CLT lab.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "rjdcov/calibration.hpp"
#include "rjdcov/clt.hpp"
#include "rjdcov/csv.hpp"
#include "rjdcov/hypothesis.hpp"
#include "rjdcov/ica.hpp"
#include "rjdcov/models.hpp"
#include "rjdcov/parallel.hpp"
#include "rjdcov/rng.hpp"

using namespace rjdcov;
using nlohmann::json;

namespace {

struct BlockRange {
    int from = 0, to = 0;  // 1-based inclusive
    std::string name;
};

std::vector<BlockRange> parse_block_spec(const std::string& spec) {
    std::vector<BlockRange> ranges;
    std::stringstream ss(spec);
    std::string token;
    while (std::getline(ss, token, ',')) {
        const auto dash = token.find('-');
        if (dash == std::string::npos)
            throw ParseError("block spec '" + token + "': expected from-to");
        BlockRange r;
        r.from = std::atoi(token.substr(0, dash).c_str());
        r.to = std::atoi(token.substr(dash + 1).c_str());
        if (r.from < 1 || r.to < r.from)
            throw ParseError("block spec '" + token + "': invalid range");
        ranges.push_back(r);
    }
    if (ranges.size() < 2) throw ParseError("block spec: need at least 2 blocks");
    return ranges;
}

std::vector<BlockRange> load_block_schema(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open schema file " + path);
    json schema = json::parse(in);
    std::vector<BlockRange> ranges;
    for (const auto& item : schema.at("blocks")) {
        BlockRange r;
        r.from = item.at("from").get<int>();
        r.to = item.at("to").get<int>();
        if (item.contains("name")) r.name = item["name"].get<std::string>();
        ranges.push_back(r);
    }
    if (ranges.size() < 2) throw ParseError("schema: need at least 2 blocks");
    return ranges;
}

BlockedSample split_by_ranges(const Eigen::MatrixXd& data, const std::vector<BlockRange>& ranges) {
    std::vector<bool> used(static_cast<std::size_t>(data.cols()), false);
    std::vector<Eigen::MatrixXd> blocks;
    std::vector<std::string> labels;
    bool any_label = false;
    for (const auto& r : ranges) {
        if (r.to > data.cols())
            throw ParseError("block range " + std::to_string(r.from) + "-" + std::to_string(r.to) +
                             " exceeds the " + std::to_string(data.cols()) + " data columns");
        for (int col = r.from; col <= r.to; ++col) {
            if (used[static_cast<std::size_t>(col) - 1])
                throw ParseError("block ranges overlap at column " + std::to_string(col));
            used[static_cast<std::size_t>(col) - 1] = true;
        }
        blocks.push_back(data.middleCols(r.from - 1, r.to - r.from + 1));
        labels.push_back(r.name);
        any_label = any_label || !r.name.empty();
    }
    for (std::size_t col = 0; col < used.size(); ++col)
        if (!used[col])
            throw ParseError("block ranges do not cover column " + std::to_string(col + 1));
    return BlockedSample(std::move(blocks), any_label ? labels : std::vector<std::string>{});
}

void emit(const std::string& content, const std::string& out_path) {
    if (out_path.empty())
        std::cout << content << "\n";
    else
        atomic_write_file(out_path, content);
}

std::string cache_dir_or_default(std::string flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("RJDCOV_CACHE_DIR")) return env;
    return ".rjdcov-cache";
}

struct ModelParams {
    double rho = 0.0, a = 0.0, b = 0.0, delta = 0.0;
    int q = 3, d = 1, n = 200, r = 3;
    std::string law = "gaussian";
    std::string dist = "e";
};

SymmetricLaw parse_law(const std::string& name) {
    if (name == "gaussian") return SymmetricLaw::Gaussian;
    if (name == "t3") return SymmetricLaw::T3;
    if (name == "t2") return SymmetricLaw::T2;
    if (name == "cauchy") return SymmetricLaw::Cauchy;
    throw ParseError("unknown symmetric law '" + name + "' (gaussian|t3|t2|cauchy)");
}

BlockedSample generate_model(const std::string& model, const ModelParams& p, double param,
                             std::uint64_t seed, bool local_h = false) {
    if (local_h && model.rfind("konijn", 0) == 0)
        param /= std::sqrt(static_cast<double>(p.n));
    if (model == "gaussian-ar")
        return gen_gaussian_cov(p.n, 9, CovKind::Ar, param, {3, 3, 3}, seed);
    if (model == "gaussian-banded")
        return gen_gaussian_cov(p.n, 9, CovKind::Banded, param, {3, 3, 3}, seed);
    if (model == "copula-power") {
        const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(3, 3);
        std::vector<Eigen::MatrixXd> blocks;
        for (int i = 0; i < 3; ++i)
            blocks.push_back(
                gen_copula_power(p.n, 3, static_cast<int>(param), eye, seed * 3 + static_cast<std::uint64_t>(i)));
        return BlockedSample(std::move(blocks));
    }
    if (model == "cauchy-regression") return gen_cauchy_regression(p.n, param, seed);
    if (model == "sine") return gen_sine_dependence(p.n, param, seed);
    if (model == "konijn-gaussian" || model == "konijn-copula" || model == "konijn-t") {
        KonijnBase base;
        base.sigma = Eigen::MatrixXd(2, 2);
        base.sigma << 1.0, 0.5, 0.5, 1.0;
        if (model == "konijn-copula") {
            base.kind = KonijnBase::Kind::CopulaPower;
            base.param = p.q;
        } else if (model == "konijn-t") {
            base.kind = KonijnBase::Kind::StudentT;
            base.param = 5.0;
        }
        return gen_konijn(p.n, KonijnSpec::identity_coupling(3, 2, param, base), seed);
    }
    if (model == "sign-model") return gen_sign_model(p.n, p.d, parse_law(p.law), seed);
    if (model == "mixture") {
        // canned contamination: independent N(0,1) pair vs a shared-noise pair
        MixtureSpec spec;
        spec.delta = param;
        spec.product_law = [](Rng& rng) {
            return std::vector<Eigen::VectorXd>{Eigen::VectorXd::Constant(1, rng.normal()),
                                                Eigen::VectorXd::Constant(1, rng.normal())};
        };
        spec.dependent_law = [](Rng& rng) {
            const double shared = rng.normal();
            return std::vector<Eigen::VectorXd>{
                Eigen::VectorXd::Constant(1, shared),
                Eigen::VectorXd::Constant(1, shared + 0.5 * rng.normal())};
        };
        return gen_mixture(p.n, spec, seed);
    }
    if (model == "ica-sources") {
        if (p.dist.size() != 1) throw ParseError("--dist must be a single letter a..l");
        const Eigen::MatrixXd sources = gen_ica_sources(p.n, p.r, p.dist[0], seed);
        std::vector<Eigen::MatrixXd> blocks;
        for (int j = 0; j < p.r; ++j) blocks.push_back(sources.col(j));
        return BlockedSample(std::move(blocks));
    }
    throw ParseError("unknown model '" + model + "'");
}

std::vector<std::string> block_header(const BlockedSample& sample) {
    std::vector<std::string> header;
    for (int b = 0; b < sample.r(); ++b)
        for (int c = 0; c < sample.blocks[static_cast<std::size_t>(b)].cols(); ++c)
            header.push_back("b" + std::to_string(b + 1) + "_c" + std::to_string(c + 1));
    return header;
}

Eigen::MatrixXd concat_blocks(const BlockedSample& sample) {
    Eigen::MatrixXd all(sample.n(), sample.total_dim());
    int col = 0;
    for (const auto& blk : sample.blocks) {
        all.middleCols(col, blk.cols()) = blk;
        col += static_cast<int>(blk.cols());
    }
    return all;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rank joint distance covariance: distribution-free joint independence "
                 "testing, dependency discovery, and robust ICA"};
    app.require_subcommand(1);

    // ---- shared test options ----
    std::string input, blocks_spec, schema_path, out_path, cache_flag, dot_path, decomp_path;
    std::string kind = "joint", grid_kind = "halton", subset_spec;
    double alpha = 0.05, c_weight = 1.0;
    std::vector<double> explicit_weights;
    int B = 999;
    std::uint64_t seed = 0, grid_seed = 0;
    bool no_cache = false;

    auto add_test_common = [&](CLI::App* cmd) {
        cmd->add_option("input", input, "CSV file, one row per observation")->required();
        cmd->add_option("--blocks", blocks_spec,
                        "column ranges per block, 1-indexed inclusive (e.g. 1-3,4-6,7-9)");
        cmd->add_option("--schema", schema_path, "JSON block schema file");
        cmd->add_option("--alpha", alpha, "significance level")->check(CLI::Range(1e-9, 0.999999));
        cmd->add_option("--B", B, "number of resampling draws")->check(CLI::PositiveNumber);
        cmd->add_option("--seed", seed, "resampling seed");
        cmd->add_option("--grid", grid_kind, "reference grid kind: halton|iid");
        cmd->add_option("--grid-seed", grid_seed, "seed for iid grids");
        cmd->add_option("--cache-dir", cache_flag,
                        "null-distribution cache directory (or RJDCOV_CACHE_DIR)");
        cmd->add_flag("--no-cache", no_cache, "do not persist null distributions");
        cmd->add_option("--out", out_path, "write the report here instead of stdout");
    };

    CLI::App* cmd_test = app.add_subcommand("test", "run a joint-independence test");
    add_test_common(cmd_test);
    cmd_test->add_option("--kind", kind, "joint | pairwise | subset");
    cmd_test->add_option("--subset", subset_spec, "blocks for --kind subset (e.g. 1,2,3)");
    cmd_test->add_option("--c", c_weight, "geometric weight parameter c (C_s = c^{r-s})");
    cmd_test->add_option("--weights", explicit_weights, "explicit weights C_2..C_r");
    cmd_test->add_option("--decomp-csv", decomp_path, "write the subset decomposition CSV here");

    CLI::App* cmd_structure =
        app.add_subcommand("structure", "two-stage dependency-structure discovery");
    add_test_common(cmd_structure);
    cmd_structure->add_option("--dot", dot_path, "write a DOT graph here");

    // ---- simulate ----
    std::string model = "gaussian-ar";
    ModelParams params;
    double model_param = 0.0;
    bool local_h = false;
    CLI::App* cmd_simulate = app.add_subcommand("simulate", "draw one synthetic dataset as CSV");
    cmd_simulate->add_option("--model", model,
                             "gaussian-ar|gaussian-banded|copula-power|cauchy-regression|sine|"
                             "konijn-gaussian|konijn-copula|konijn-t|sign-model|mixture|"
                             "ica-sources")
        ->required();
    cmd_simulate->add_option("--param", model_param, "model parameter (rho, a, b, delta, q)");
    cmd_simulate->add_flag("--local-h", local_h,
                           "treat konijn parameters as h with delta = h/sqrt(n)");
    cmd_simulate->add_option("--r", params.r, "number of components (ica-sources)");
    cmd_simulate->add_option("--dist", params.dist, "source distribution a..l (ica-sources)");
    cmd_simulate->add_option("--n", params.n, "sample size")->check(CLI::PositiveNumber);
    cmd_simulate->add_option("--d", params.d, "per-block dimension (sign-model)");
    cmd_simulate->add_option("--law", params.law, "marginal law (sign-model)");
    cmd_simulate->add_option("--seed", seed, "generator seed");
    cmd_simulate->add_option("--out", out_path, "output CSV path (default stdout)");

    // ---- power ----
    std::vector<double> param_grid;
    int reps = 200;
    std::string power_test = "joint";
    CLI::App* cmd_power = app.add_subcommand("power", "rejection-rate study over a parameter grid");
    cmd_power->add_option("--model", model, "model name (see simulate)")->required();
    cmd_power->add_option("--params", param_grid, "parameter grid values")->required();
    cmd_power->add_option("--n", params.n, "sample size")->check(CLI::PositiveNumber);
    cmd_power->add_option("--d", params.d, "per-block dimension (sign-model)");
    cmd_power->add_option("--law", params.law, "marginal law (sign-model)");
    cmd_power->add_option("--reps", reps, "replicates per grid point")->check(CLI::PositiveNumber);
    cmd_power->add_flag("--local-h", local_h,
                        "treat konijn parameters as h with delta = h/sqrt(n)");
    cmd_power->add_option("--test", power_test, "joint | pairwise | higher");
    cmd_power->add_option("--alpha", alpha, "significance level");
    cmd_power->add_option("--B", B, "resampling draws");
    cmd_power->add_option("--seed", seed, "base seed");
    cmd_power->add_option("--c", c_weight, "geometric weight parameter for the joint test");
    cmd_power->add_option("--out", out_path, "output CSV path (default stdout)");

    // ---- ica ----
    double ica_c = 1.0, bw_factor = 1.06;
    int restarts = 8, max_iter = 500;
    std::string sources_out;
    CLI::App* cmd_ica = app.add_subcommand("ica", "fit the rank-based ICA model");
    cmd_ica->add_option("input", input, "CSV file, one row per observation")->required();
    cmd_ica->add_option("--c", ica_c, "compact-form weight parameter");
    cmd_ica->add_option("--restarts", restarts, "optimizer restarts");
    cmd_ica->add_option("--max-iter", max_iter, "iterations per restart");
    cmd_ica->add_option("--bw-factor", bw_factor, "kernel CDF bandwidth factor");
    cmd_ica->add_option("--seed", seed, "restart seed");
    cmd_ica->add_option("--out", out_path, "report path (default stdout)");
    cmd_ica->add_option("--sources-out", sources_out, "write recovered sources CSV here");

    // ---- clt-check ----
    int clt_n = 100, clt_draws = 10000;
    double clt_scale = 1.0;
    CLI::App* cmd_clt = app.add_subcommand(
        "clt-check", "combinatorial-CLT diagnostic on a random bounded centered tensor");
    cmd_clt->add_option("--n", clt_n, "tensor side length")->check(CLI::PositiveNumber);
    cmd_clt->add_option("--draws", clt_draws, "Monte-Carlo permutation draws");
    cmd_clt->add_option("--seed", seed, "seed");
    cmd_clt->add_option("--scale", clt_scale, "entry scale before the 1/sqrt(n) bound");
    cmd_clt->add_option("--out", out_path, "report path (default stdout)");

    // ---- grid ----
    int grid_n = 100, grid_dim = 1;
    CLI::App* cmd_grid = app.add_subcommand("grid", "export a reference grid as CSV");
    cmd_grid->add_option("--n", grid_n, "points")->check(CLI::PositiveNumber);
    cmd_grid->add_option("--dim", grid_dim, "dimension")->check(CLI::PositiveNumber);
    cmd_grid->add_option("--kind", grid_kind, "halton | iid");
    cmd_grid->add_option("--seed", grid_seed, "seed for iid grids");
    cmd_grid->add_option("--out", out_path, "output CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        // ------------------------------------------------------------------
        if (app.got_subcommand(cmd_test) || app.got_subcommand(cmd_structure)) {
            const auto table = read_csv(input);
            std::vector<BlockRange> ranges;
            if (!schema_path.empty())
                ranges = load_block_schema(schema_path);
            else if (!blocks_spec.empty())
                ranges = parse_block_spec(blocks_spec);
            else
                throw ParseError("--blocks or --schema is required");
            BlockedSample sample = split_by_ranges(table.values, ranges);

            TestOptions options;
            options.grid_kind = grid_kind == "iid" ? GridKind::IidUniform : GridKind::Halton;
            options.grid_seed = grid_seed;
            std::optional<NullCache> cache;
            if (!no_cache) {
                cache.emplace(cache_dir_or_default(cache_flag));
                options.cache = &*cache;
            }
            std::map<std::string, NullDistribution> memo;
            options.memo = &memo;

            if (app.got_subcommand(cmd_structure)) {
                const auto report = dependency_structure(sample, alpha, B, seed, options);
                if (!dot_path.empty()) atomic_write_file(dot_path, report.to_dot());
                emit(report.to_json(), out_path);
                return 0;
            }

            WeightScheme weights = explicit_weights.empty()
                                       ? WeightScheme::geometric(c_weight)
                                       : WeightScheme::explicit_weights(explicit_weights);
            TestReport report;
            if (kind == "joint") {
                report = test_joint(sample, weights, alpha, B, seed, options);
            } else if (kind == "pairwise") {
                report = test_pairwise_aggregate(sample, alpha, B, seed, options);
            } else if (kind == "subset") {
                std::vector<int> subset;
                std::stringstream ss(subset_spec);
                std::string token;
                while (std::getline(ss, token, ',')) subset.push_back(std::atoi(token.c_str()) - 1);
                report = test_subset(sample, subset, alpha, B, seed, options);
            } else {
                throw ParseError("unknown test kind '" + kind + "'");
            }
            if (!decomp_path.empty()) {
                RjdcovResult result;
                result.total = report.statistic;
                result.decomposition = report.decomposition;
                WeightScheme csv_weights = weights;
                if (kind != "joint") {
                    // pairwise sums pairs with unit weight; a subset test
                    // weights its own size with 1 and everything else with 0
                    std::vector<double> w(static_cast<std::size_t>(sample.r()) - 1, 0.0);
                    const std::size_t active =
                        kind == "pairwise" ? 0 : report.decomposition.front().subset.size() - 2;
                    w[active] = 1.0;
                    csv_weights = WeightScheme::explicit_weights(w);
                }
                write_decomposition_csv(decomp_path, result, csv_weights, sample.r());
            }
            emit(report.to_json(), out_path);
            return 0;
        }

        // ------------------------------------------------------------------
        if (app.got_subcommand(cmd_simulate)) {
            const auto sample = generate_model(model, params, model_param, seed, local_h);
            std::ostringstream out;
            const auto header = block_header(sample);
            const auto all = concat_blocks(sample);
            for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
            out << "\n";
            char buf[32];
            for (int i = 0; i < all.rows(); ++i) {
                for (int j = 0; j < all.cols(); ++j) {
                    std::snprintf(buf, sizeof(buf), "%.17g", all(i, j));
                    out << (j ? "," : "") << buf;
                }
                out << "\n";
            }
            emit(out.str(), out_path);
            return 0;
        }

        // ------------------------------------------------------------------
        if (app.got_subcommand(cmd_power)) {
            std::ostringstream out;
            out << "model,param,n,reps,test,reject_rate,mc_se,wall_s\n";
            std::map<std::string, NullDistribution> memo;
            for (double param : param_grid) {
                const auto start = std::chrono::steady_clock::now();
                auto run_rep = [&](int rep, TestOptions options) {
                    const auto sample = generate_model(
                        model, params, param,
                        seed * 1000003ULL + static_cast<std::uint64_t>(rep), local_h);
                    TestReport report;
                    if (power_test == "joint")
                        report = test_joint(sample, WeightScheme::geometric(c_weight), alpha, B,
                                            seed, options);
                    else if (power_test == "pairwise")
                        report = test_pairwise_aggregate(sample, alpha, B, seed, options);
                    else if (power_test == "higher")
                        report = test_subset(sample, {0, 1, 2}, alpha, B, seed, options);
                    else
                        throw ParseError("unknown --test '" + power_test + "'");
                    return report.reject;
                };
                TestOptions options;
                options.memo = &memo;
                // replicate 0 fills the memo; the remaining replicates only
                // read it, so they can run in parallel with seed partitioning
                std::vector<char> rejected(static_cast<std::size_t>(reps), 0);
                rejected[0] = run_rep(0, options) ? 1 : 0;
                parallel_for(static_cast<std::size_t>(reps) - 1, [&](std::size_t k) {
                    rejected[k + 1] = run_rep(static_cast<int>(k) + 1, options) ? 1 : 0;
                });
                int rejects = 0;
                for (char flag : rejected) rejects += flag;
                const double rate = static_cast<double>(rejects) / reps;
                const double se = std::sqrt(rate * (1.0 - rate) / reps);
                const double wall =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                        .count();
                char buf[160];
                std::snprintf(buf, sizeof(buf), "%s,%.17g,%d,%d,%s,%.6f,%.6f,%.3f\n",
                              model.c_str(), param, params.n, reps, power_test.c_str(), rate, se,
                              wall);
                out << buf;
            }
            emit(out.str(), out_path);
            return 0;
        }

        // ------------------------------------------------------------------
        if (app.got_subcommand(cmd_ica)) {
            const auto table = read_csv(input);
            KernelCdfConfig config = KernelCdfConfig::logistic();
            config.bandwidth_factor = bw_factor;
            IcaOptions options;
            options.restarts = restarts;
            options.max_iterations = max_iter;
            options.seed = seed;
            const auto fit = fit_ica(table.values, config, ica_c, options);

            json j;
            j["schema_version"] = 1;
            j["kind"] = "ica";
            j["n"] = table.values.rows();
            j["r"] = table.values.cols();
            j["c"] = ica_c;
            j["seed"] = seed;
            j["converged"] = fit.converged;
            j["objective"] = fit.objective;
            j["theta"] = std::vector<double>(fit.theta.theta.data(),
                                             fit.theta.theta.data() + fit.theta.theta.size());
            auto matrix_json = [](const Eigen::MatrixXd& m) {
                json rows = json::array();
                for (int i = 0; i < m.rows(); ++i) {
                    json row = json::array();
                    for (int k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
                    rows.push_back(row);
                }
                return rows;
            };
            j["W"] = matrix_json(fit.rotation);
            j["unmixing"] = matrix_json(fit.unmixing);
            json trace = json::array();
            for (const auto& t : fit.trace)
                trace.push_back({{"iteration", t.iteration},
                                 {"objective", t.objective},
                                 {"gradient_norm", t.gradient_norm}});
            j["trace"] = trace;
            if (!sources_out.empty()) {
                const Eigen::MatrixXd centered =
                    table.values.rowwise() - table.values.colwise().mean();
                std::vector<std::string> header;
                for (int k = 0; k < table.values.cols(); ++k)
                    header.push_back("s" + std::to_string(k + 1));
                write_matrix_csv(sources_out, header,
                                 centered * fit.unmixing.transpose());
            }
            emit(j.dump(2), out_path);
            return 0;
        }

        // ------------------------------------------------------------------
        if (app.got_subcommand(cmd_clt)) {
            Rng rng = Rng::stream(seed, {0x636C74ULL});  // "clt"
            Tensor raw = Tensor::zeros(3, clt_n);
            const double bound = clt_scale / std::sqrt(static_cast<double>(clt_n));
            for (auto& v : raw.entries) v = rng.uniform(-bound, bound);
            const auto tensor = center_tensor(raw);
            const auto report = normality_diagnostic(tensor, clt_draws, seed);

            json j;
            j["schema_version"] = 1;
            j["kind"] = "clt-check";
            j["n"] = report.n;
            j["draws"] = report.draws;
            j["seed"] = seed;
            j["ks_statistic"] = report.ks_statistic;
            j["ks_pvalue"] = report.ks_pvalue;
            j["empirical_var"] = report.empirical_var;
            j["analytic_var"] = report.analytic_var;
            j["k1"] = tensor.k1();
            emit(j.dump(2), out_path);
            return 0;
        }

        // ------------------------------------------------------------------
        if (app.got_subcommand(cmd_grid)) {
            const ReferenceGrid grid = grid_kind == "iid"
                                           ? iid_uniform_grid(grid_n, grid_dim, grid_seed)
                                           : halton_grid(grid_n, grid_dim);
            grid.write_csv(out_path);
            return 0;
        }
    } catch (const std::exception& err) {
        std::cerr << "rjdcov: error: " << err.what() << "\n";
        return 1;
    }
    return 0;
}
