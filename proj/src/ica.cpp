#include "rjdcov/ica.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "rjdcov/errors.hpp"
#include "rjdcov/jdcov.hpp"
#include "rjdcov/ot_ranks.hpp"
#include "rjdcov/parallel.hpp"
#include "rjdcov/rng.hpp"

namespace rjdcov {

namespace {

constexpr std::uint64_t kRestartStream = 3;

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

/// Left-multiply m in place by the plane rotation G_{i,j}(theta).
void apply_givens(Eigen::MatrixXd& m, int i, int j, double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const Eigen::RowVectorXd row_i = m.row(i);
    const Eigen::RowVectorXd row_j = m.row(j);
    m.row(i) = c * row_i - s * row_j;
    m.row(j) = s * row_i + c * row_j;
}

/// Left-multiply by dG_{i,j}/dtheta, which is zero outside rows i and j.
void apply_givens_derivative(Eigen::MatrixXd& m, int i, int j, double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const Eigen::RowVectorXd row_i = m.row(i);
    const Eigen::RowVectorXd row_j = m.row(j);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m.rows(), m.cols());
    out.row(i) = -s * row_i - c * row_j;
    out.row(j) = c * row_i - s * row_j;
    m = out;
}

Eigen::VectorXd bandwidths_for(const Eigen::MatrixXd& rotated, const KernelCdfConfig& config) {
    const int n = static_cast<int>(rotated.rows());
    const int r = static_cast<int>(rotated.cols());
    Eigen::VectorXd h(r);
    if (!config.fixed_bandwidths.empty()) {
        if (static_cast<int>(config.fixed_bandwidths.size()) != r)
            throw SizeMismatch("KernelCdfConfig: need one bandwidth per component");
        for (int i = 0; i < r; ++i) h(i) = config.fixed_bandwidths[static_cast<std::size_t>(i)];
    } else {
        for (int i = 0; i < r; ++i) {
            const double mean = rotated.col(i).mean();
            const double sd = std::sqrt((rotated.col(i).array() - mean).square().sum() /
                                        static_cast<double>(n - 1));
            h(i) = config.bandwidth_factor * sd * std::pow(static_cast<double>(n),
                                                           config.bandwidth_exponent);
        }
    }
    for (int i = 0; i < r; ++i)
        if (!(h(i) > 0.0)) throw std::invalid_argument("kernel CDF bandwidth must be positive");
    return h;
}

/// Smoothed CDF values u(a,i) = (1/n) sum_v G((s_ai - s_vi)/h_i).
Eigen::MatrixXd smoothed_cdf(const Eigen::MatrixXd& rotated, const KernelCdfConfig& config,
                             const Eigen::VectorXd& h) {
    const int n = static_cast<int>(rotated.rows());
    const int r = static_cast<int>(rotated.cols());
    Eigen::MatrixXd u(n, r);
    for (int i = 0; i < r; ++i) {
        const double inv_h = 1.0 / h(i);
        for (int a = 0; a < n; ++a) {
            double acc = 0.0;
            const double sa = rotated(a, i);
            for (int v = 0; v < n; ++v) acc += config.G((sa - rotated(v, i)) * inv_h);
            u(a, i) = acc / static_cast<double>(n);
        }
    }
    return u;
}

std::vector<CenteredDistanceMatrix> component_matrices(const Eigen::MatrixXd& u) {
    std::vector<CenteredDistanceMatrix> mats;
    mats.reserve(static_cast<std::size_t>(u.cols()));
    for (int i = 0; i < u.cols(); ++i) mats.push_back(centered_matrix(u.col(i)));
    return mats;
}

/// ECDF transform of one column: k-th smallest value maps to k/n.
Eigen::VectorXd ecdf_column(const Eigen::VectorXd& s) {
    const int n = static_cast<int>(s.size());
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return s(a) < s(b); });
    Eigen::VectorXd u(n);
    for (int k = 0; k < n; ++k)
        u(order[static_cast<std::size_t>(k)]) = static_cast<double>(k + 1) / static_cast<double>(n);
    return u;
}

}  // namespace

KernelCdfConfig KernelCdfConfig::logistic() {
    KernelCdfConfig config;
    config.G = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
    config.G_prime = [](double x) {
        const double g = 1.0 / (1.0 + std::exp(-x));
        return g * (1.0 - g);
    };
    return config;
}

int RotationAngles::pair_index(int i, int j, int r) {
    // Offset of the (i, j) pair, i < j, in lexicographic order.
    return i * (2 * r - i - 1) / 2 + (j - i - 1);
}

void RotationAngles::wrap(int r) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    int k = 0;
    for (int i = 0; i < r - 1; ++i) {
        for (int j = i + 1; j < r; ++j, ++k) {
            const double period = (i == 0) ? two_pi : std::numbers::pi;
            double v = std::fmod(theta(k), period);
            if (v < 0) v += period;
            theta(k) = v;
        }
    }
}

Eigen::MatrixXd rotation_matrix(const RotationAngles& angles, int r) {
    if (angles.theta.size() != RotationAngles::count(r))
        throw SizeMismatch("rotation_matrix: theta length != r(r-1)/2");
    Eigen::MatrixXd w = Eigen::MatrixXd::Identity(r, r);
    for (int i = 0; i < r - 1; ++i)
        for (int j = i + 1; j < r; ++j)
            apply_givens(w, i, j, angles.theta(RotationAngles::pair_index(i, j, r)));
    return w;
}

Eigen::MatrixXd rotation_matrix_derivative(const RotationAngles& angles, int r, int k) {
    if (k < 0 || k >= RotationAngles::count(r))
        throw SizeMismatch("rotation_matrix_derivative: index out of range");
    Eigen::MatrixXd w = Eigen::MatrixXd::Identity(r, r);
    for (int i = 0; i < r - 1; ++i) {
        for (int j = i + 1; j < r; ++j) {
            const int idx = RotationAngles::pair_index(i, j, r);
            if (idx == k)
                apply_givens_derivative(w, i, j, angles.theta(idx));
            else
                apply_givens(w, i, j, angles.theta(idx));
        }
    }
    return w;
}

WhiteningResult whiten(const Eigen::MatrixXd& data) {
    const int n = static_cast<int>(data.rows());
    if (n < 2) throw SizeMismatch("whiten: need n >= 2");

    WhiteningResult result;
    result.mean = data.colwise().mean();
    Eigen::MatrixXd centered = data.rowwise() - result.mean;
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success)
        throw SingularCovariance("whiten: eigendecomposition failed");
    const Eigen::VectorXd lambda = eig.eigenvalues();
    if (!(lambda.minCoeff() > 1e-10 * lambda.maxCoeff()))
        throw SingularCovariance("whiten: sample covariance is numerically singular");

    result.transform =
        lambda.cwiseSqrt().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    result.whitened = centered * result.transform.transpose();
    return result;
}

double ica_objective(const RotationAngles& angles, const Eigen::MatrixXd& whitened,
                     const KernelCdfConfig& config, double c) {
    const int r = static_cast<int>(whitened.cols());
    const Eigen::MatrixXd rotated = whitened * rotation_matrix(angles, r).transpose();
    const Eigen::VectorXd h = bandwidths_for(rotated, config);
    const Eigen::MatrixXd u = smoothed_cdf(rotated, config, h);
    return compact_statistic(component_matrices(u), c);
}

double ica_objective_ecdf(const RotationAngles& angles, const Eigen::MatrixXd& whitened,
                          double c) {
    const int r = static_cast<int>(whitened.cols());
    const Eigen::MatrixXd rotated = whitened * rotation_matrix(angles, r).transpose();
    std::vector<CenteredDistanceMatrix> mats;
    mats.reserve(static_cast<std::size_t>(r));
    for (int i = 0; i < r; ++i) mats.push_back(centered_matrix(ecdf_column(rotated.col(i))));
    return compact_statistic(mats, c);
}

Eigen::VectorXd ica_gradient(const RotationAngles& angles, const Eigen::MatrixXd& whitened,
                             const KernelCdfConfig& config, double c) {
    const int n = static_cast<int>(whitened.rows());
    const int r = static_cast<int>(whitened.cols());
    const double dn = static_cast<double>(n);

    const Eigen::MatrixXd w = rotation_matrix(angles, r);
    const Eigen::MatrixXd rotated = whitened * w.transpose();
    const Eigen::VectorXd h = bandwidths_for(rotated, config);
    const Eigen::MatrixXd u = smoothed_cdf(rotated, config, h);
    const auto mats = component_matrices(u);

    // dJ/du for each smoothed-CDF value, with P_i(a,b) the product of the
    // other blocks' (E + c) factors:
    //   g_c = (2/n^2) sum_b P(c,b) [ S_c/n - sgn(u_c - u_b) ]
    //       + (2/n^3) sum_a sgn(u_c - u_a) q_a - (2 S_c / n^4) Q,
    // where S_c = sum_v sgn(u_c - u_v), q_a = sum_b P(a,b), Q = sum q_a.
    Eigen::MatrixXd dj_du(n, r);
    {
        Eigen::ArrayXXd prod_accum = Eigen::ArrayXXd::Ones(n, n);
        std::vector<Eigen::ArrayXXd> prefix(static_cast<std::size_t>(r));
        for (int i = 0; i < r; ++i) {
            prefix[static_cast<std::size_t>(i)] = prod_accum;
            prod_accum *= mats[static_cast<std::size_t>(i)].array() + c;
        }
        Eigen::ArrayXXd suffix = Eigen::ArrayXXd::Ones(n, n);
        std::vector<Eigen::ArrayXXd> p_other(static_cast<std::size_t>(r));
        for (int i = r - 1; i >= 0; --i) {
            p_other[static_cast<std::size_t>(i)] = prefix[static_cast<std::size_t>(i)] * suffix;
            suffix *= mats[static_cast<std::size_t>(i)].array() + c;
        }

        for (int i = 0; i < r; ++i) {
            const Eigen::ArrayXXd& p = p_other[static_cast<std::size_t>(i)];
            const Eigen::VectorXd q = p.rowwise().sum();
            const double q_total = q.sum();
            for (int a = 0; a < n; ++a) {
                double s_a = 0.0;
                for (int v = 0; v < n; ++v) s_a += sgn(u(a, i) - u(v, i));
                double p_sign = 0.0;   // sum_b P(a,b) sgn(u_a - u_b)
                double q_sign = 0.0;   // sum_b sgn(u_a - u_b) q_b
                for (int b = 0; b < n; ++b) {
                    const double s = sgn(u(a, i) - u(b, i));
                    p_sign += p(a, b) * s;
                    q_sign += q(b) * s;
                }
                dj_du(a, i) = 2.0 / (dn * dn) * (s_a / dn * q(a) - p_sign) +
                              2.0 / (dn * dn * dn) * q_sign -
                              2.0 * s_a / (dn * dn * dn * dn) * q_total;
            }
        }
    }

    // du/dtheta goes through the kernel: du_a = sum_v kappa(a,v) (ds_a - ds_v)
    // with kappa(a,v) = G'((s_a - s_v)/h) / (n h). Collapsing over a gives
    // e(a,i) = g_a K_a - sum_v kappa(v,a) g_v with K_a the row sums.
    Eigen::MatrixXd e(n, r);
    {
        Eigen::MatrixXd kappa(n, n);
        for (int i = 0; i < r; ++i) {
            const double inv_h = 1.0 / h(i);
            for (int a = 0; a < n; ++a)
                for (int v = 0; v < n; ++v)
                    kappa(a, v) = config.G_prime((rotated(a, i) - rotated(v, i)) * inv_h) *
                                  inv_h / dn;
            const Eigen::VectorXd row_sums = kappa.rowwise().sum();
            const Eigen::VectorXd col_against_g = kappa.transpose() * dj_du.col(i);
            e.col(i) = dj_du.col(i).cwiseProduct(row_sums) - col_against_g;
        }
    }

    // dJ/dtheta_k = trace(W'_k Z^T E) since ds(a,i)/dtheta_k = (W'_k z_a)_i.
    const Eigen::MatrixXd zte = whitened.transpose() * e;
    Eigen::VectorXd grad(RotationAngles::count(r));
    for (int k = 0; k < grad.size(); ++k)
        grad(k) = (rotation_matrix_derivative(angles, r, static_cast<int>(k)) * zte).trace();
    return grad;
}

namespace {

struct RestartResult {
    RotationAngles angles;
    double objective = 0.0;
    bool converged = false;
    std::vector<IcaTraceEntry> trace;
};

RestartResult run_restart(int restart, int r, const Eigen::MatrixXd& whitened,
                          const KernelCdfConfig& config, double c, const IcaOptions& options) {
    const int dim = RotationAngles::count(r);
    RestartResult result;
    if (restart == 0) {
        result.angles.theta = Eigen::VectorXd::Zero(dim);
    } else {
        Rng rng = Rng::stream(options.seed, {kRestartStream, static_cast<std::uint64_t>(restart)});
        result.angles.theta.resize(dim);
        int k = 0;
        for (int i = 0; i < r - 1; ++i)
            for (int j = i + 1; j < r; ++j, ++k)
                result.angles.theta(k) =
                    rng.uniform01() * (i == 0 ? 2.0 * std::numbers::pi : std::numbers::pi);
    }

    result.objective = ica_objective(result.angles, whitened, config, c);
    double step = 1.0;
    int flat_iterations = 0;

    for (int iter = 0; iter < options.max_iterations; ++iter) {
        const Eigen::VectorXd grad = ica_gradient(result.angles, whitened, config, c);
        const double grad_norm = grad.lpNorm<Eigen::Infinity>();
        result.trace.push_back({iter, result.objective, grad_norm});
        if (grad_norm < options.gradient_tolerance) {
            result.converged = true;
            break;
        }

        // Armijo backtracking along -grad; the previous accepted step
        // (doubled) seeds the next search.
        const double slope = grad.squaredNorm();
        double alpha = std::min(step * 2.0, 1.0e2);
        bool accepted = false;
        RotationAngles candidate;
        double cand_obj = result.objective;
        while (alpha > 1e-14) {
            candidate.theta = result.angles.theta - alpha * grad;
            cand_obj = ica_objective(candidate, whitened, config, c);
            if (cand_obj <= result.objective - 1e-4 * alpha * slope) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) break;  // no descent at machine step: treat as stalled

        step = alpha;
        candidate.wrap(r);
        result.angles = candidate;
        const double decrease =
            (result.objective - cand_obj) / std::max(std::abs(result.objective), 1e-30);
        result.objective = cand_obj;
        flat_iterations = decrease < options.objective_tolerance ? flat_iterations + 1 : 0;
        if (flat_iterations >= 5) {
            result.converged = true;
            break;
        }
    }
    if (options.max_iterations == 0)
        result.trace.push_back({0, result.objective, std::numeric_limits<double>::quiet_NaN()});
    return result;
}

}  // namespace

IcaEstimate fit_ica(const Eigen::MatrixXd& data, const KernelCdfConfig& config, double c,
                    const IcaOptions& options) {
    if (data.rows() < 2) throw SizeMismatch("fit_ica: need n >= 2");
    const int r = static_cast<int>(data.cols());
    const WhiteningResult white = whiten(data);

    // restarts are independent given their substreams; the winner is picked
    // by a fixed sequential scan so the schedule cannot change the result
    const std::size_t restarts = static_cast<std::size_t>(std::max(1, options.restarts));
    std::vector<RestartResult> results(restarts);
    parallel_for(restarts, [&](std::size_t k) {
        results[k] = run_restart(static_cast<int>(k), r, white.whitened, config, c, options);
    });

    std::size_t winner = 0;
    for (std::size_t k = 1; k < restarts; ++k)
        if (results[k].objective < results[winner].objective) winner = k;

    IcaEstimate best;
    best.theta = results[winner].angles;
    best.objective = results[winner].objective;
    best.converged = results[winner].converged;
    best.trace = std::move(results[winner].trace);
    best.rotation = rotation_matrix(best.theta, r);
    best.unmixing = best.rotation * white.transform;
    return best;
}

double recovery_error(const Eigen::MatrixXd& m_hat, const Eigen::MatrixXd& m) {
    if (m_hat.rows() != m_hat.cols() || m.rows() != m.cols() || m_hat.rows() != m.rows())
        throw SizeMismatch("recovery_error: matrices must be square and equally sized");
    const int d = static_cast<int>(m.rows());
    Eigen::FullPivLU<Eigen::MatrixXd> lu(m_hat);
    if (!lu.isInvertible()) throw SingularMatrix("recovery_error: M_hat is singular");
    const Eigen::MatrixXd v = lu.solve(m);

    // cost(i,k): row i of V matched to unit vector e_k at the optimal
    // positive scale, 1 - V(i,k)^2 / ||V_i||^2.
    Eigen::MatrixXd cost(d, d);
    for (int i = 0; i < d; ++i) {
        const double norm2 = v.row(i).squaredNorm();
        for (int k = 0; k < d; ++k) cost(i, k) = 1.0 - v(i, k) * v(i, k) / norm2;
    }

    double best = std::numeric_limits<double>::infinity();
    if (d <= 8) {
        std::vector<int> perm(static_cast<std::size_t>(d));
        std::iota(perm.begin(), perm.end(), 0);
        do {
            double total = 0.0;
            for (int i = 0; i < d; ++i) total += cost(i, perm[static_cast<std::size_t>(i)]);
            best = std::min(best, total);
        } while (std::next_permutation(perm.begin(), perm.end()));
    } else {
        const auto assignment = solve_lap(cost);
        best = 0.0;
        for (int i = 0; i < d; ++i) best += cost(i, assignment[static_cast<std::size_t>(i)]);
    }
    best = std::max(0.0, best);
    return std::sqrt(best) / std::sqrt(static_cast<double>(d - 1));
}

}  // namespace rjdcov
