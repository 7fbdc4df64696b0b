#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

namespace rjdcov {

/// Givens-angle parameterization of SO(r): theta has length r(r-1)/2,
/// ordered lexicographically over pairs (i,j), 0 <= i < j < r. The canonical
/// domain keeps theta_{0,j} in [0, 2pi) and theta_{i,j} in [0, pi) for i > 0.
struct RotationAngles {
    Eigen::VectorXd theta;

    static int count(int r) { return r * (r - 1) / 2; }
    static int pair_index(int i, int j, int r);

    /// Wrap every angle back into the canonical domain. The objective is
    /// periodic with these periods, so wrapping never changes its value.
    void wrap(int r);
};

struct WhiteningResult {
    Eigen::MatrixXd transform;  // O = Lambda^{-1/2} P^T
    Eigen::RowVectorXd mean;
    Eigen::MatrixXd whitened;  // (data - mean) O^T, sample covariance ~ I
};

/// Smoothed marginal CDF used in place of the nondifferentiable ECDF: G is a
/// CDF-shaped Lipschitz kernel integral (logistic by default) and the
/// bandwidth follows h_i = factor * sd_i * n^exponent unless fixed.
struct KernelCdfConfig {
    std::function<double(double)> G;
    std::function<double(double)> G_prime;
    double bandwidth_factor = 1.06;
    double bandwidth_exponent = -0.2;
    std::vector<double> fixed_bandwidths;  // per component; empty = use the rule

    static KernelCdfConfig logistic();
};

struct IcaOptions {
    int restarts = 8;
    int max_iterations = 500;
    double gradient_tolerance = 1e-5;     // infinity norm
    double objective_tolerance = 1e-9;    // relative decrease over 5 iterations
    std::uint64_t seed = 0;
};

struct IcaTraceEntry {
    int iteration = 0;
    double objective = 0.0;
    double gradient_norm = 0.0;
};

struct IcaEstimate {
    RotationAngles theta;
    Eigen::MatrixXd rotation;  // W(theta), orthogonal with det +1
    Eigen::MatrixXd unmixing;  // W(theta) * O
    double objective = 0.0;
    bool converged = false;    // false = NonConvergence: best iterate returned
    std::vector<IcaTraceEntry> trace;  // best restart's path
};

/// Centering and spectral whitening. Throws SingularCovariance when the
/// smallest covariance eigenvalue is below 1e-10 times the largest.
WhiteningResult whiten(const Eigen::MatrixXd& data);

/// W(theta) = Q^{(r-1)} ... Q^{(1)} as an ordered product of plane rotations.
Eigen::MatrixXd rotation_matrix(const RotationAngles& angles, int r);

/// d W(theta) / d theta_k: the same product with factor k differentiated.
Eigen::MatrixXd rotation_matrix_derivative(const RotationAngles& angles, int r, int k);

/// RJdCov objective of the rotated components: each 1-d component of
/// Z W(theta)^T is pushed through its smoothed CDF and the compact-form
/// statistic with parameter c is evaluated on the resulting 1-d blocks.
/// `whitened` must have (numerically) identity sample covariance; under that
/// contract the bandwidth rule is constant in theta.
double ica_objective(const RotationAngles& angles, const Eigen::MatrixXd& whitened,
                     const KernelCdfConfig& config, double c);

/// The exact (nonsmooth) variant: components ranked by their ECDF instead of
/// the kernel-smoothed CDF. Evaluation only; optimization always runs on the
/// smoothed objective.
double ica_objective_ecdf(const RotationAngles& angles, const Eigen::MatrixXd& whitened, double c);

/// Analytic gradient of ica_objective: the chain rule through the centered
/// rank-distance matrices (sign-function terms), the kernel CDF values, and
/// the Givens-product derivatives. Exact for the implemented objective up to
/// the sign-function kinks, so it matches central finite differences on
/// tie-free inputs.
Eigen::VectorXd ica_gradient(const RotationAngles& angles, const Eigen::MatrixXd& whitened,
                             const KernelCdfConfig& config, double c);

/// Whitening, then multi-restart gradient descent with Armijo backtracking
/// on the smoothed objective. Returns the best restart; `converged` is false
/// when no restart met the tolerances (best iterate still returned).
IcaEstimate fit_ica(const Eigen::MatrixXd& data, const KernelCdfConfig& config, double c,
                    const IcaOptions& options = {});

/// Signed-permutation-and-positive-scale invariant recovery error
///   D(M_hat, M) = inf_C ||C M_hat^{-1} M - I||_F / sqrt(d-1),
/// computed exactly: per row-assignment the optimal positive scale is closed
/// form, and the assignment is minimized exhaustively (r <= 8) or by exact
/// linear assignment.
double recovery_error(const Eigen::MatrixXd& m_hat, const Eigen::MatrixXd& m);

}  // namespace rjdcov
