#pragma once

#include "dcv/mesh.hpp"
#include "dcv/prior_fit.hpp"

#include <json.hpp>

#include <functional>
#include <optional>
#include <vector>

namespace dcv {

/// Threshold below which the GST operator returns 0:
/// (2 tau (1-p))^(1/(2-p)) + tau p (2 tau (1-p))^((p-1)/(2-p)); tau when p = 1.
double gst_threshold(double tau, double p);

/// argmin_{x >= 0} (1/2)(x - d)^2 + tau x^p for d, tau >= 0 and p in (0, 1].
/// Soft threshold for p = 1; otherwise zero at or below gst_threshold and the
/// fixed point of x <- d - tau p x^(p-1) started from d above it.
double gst_shrink(double d, double tau, double p);

/// Per-edge shrinkage of the edge-gradient field with tau = lambda / (2 beta):
/// each row keeps its direction and has its norm replaced by gst_shrink(norm).
Field psi_update(const Field& edge_grads, double lambda, double beta, double p);

struct SolveReport {
    int iterations = 0;          // summed over columns
    double relative_residual = 0.0; // worst column
};

/// Relative residual the iterative solver must reach before x_update gives up.
inline constexpr double kSolveTolerance = 1e-10;

/// Minimizer of (1/2)|X0 - X|^2 + beta |DX - psi|^2, i.e. the solution of
/// (I + 2 beta D^T D) X = X0 + 2 beta D^T psi, one Jacobi-preconditioned
/// conjugate gradient solve per column. `warm_start`, when given, seeds the
/// iteration. Throws NumericError with the achieved residual when the
/// relative residual stays above kSolveTolerance.
Field x_update(const Field& x0, const EdgeDifferentialOperator& d, const Field& psi, double beta,
               const Field* warm_start = nullptr, SolveReport* report = nullptr);

/// Dense Cholesky solve of the same system; only for n <= 500.
Field x_update_dense(const Field& x0, const EdgeDifferentialOperator& d, const Field& psi,
                     double beta);

/// (1/2)|X0 - X|^2 + lambda sum_i |psi_i|^p + beta |DX - psi|^2 (squared Frobenius).
double splitting_objective(const Field& x, const Field& x0, const EdgeDifferentialOperator& d,
                           const Field& psi, double lambda, double beta, double p);

/// (1/2)|X0 - X|^2 + lambda sum_i |(DX)_i|^p.
double lp_objective(const Field& x, const Field& x0, const EdgeDifferentialOperator& d,
                    double lambda, double p);

/// Uniform umbrella smoothing, `iterations` times X <- X + tau (mean of
/// neighbours - X). The isotropic baseline.
Field umbrella_smooth(const EdgeDifferentialOperator& d, const Field& x, double tau,
                      int iterations);

struct DenoiseConfig {
    /// Initial splitting penalty. Both terms of the splitting objective scale
    /// with length squared, so the penalty carries no units.
    double beta0 = 1.0;
    double beta_growth = 2.0;
    double beta_max = 1e5;
    int outer_iters = 3;
    int inner_iters = 4;
    /// Skips fitting and uses these parameters throughout.
    std::optional<HyperLaplacianParams> fixed_params;
    /// When false, p is fitted once and only (sigma, theta) are refitted.
    bool refit_p_each_outer = true;
    /// Umbrella passes giving the pilot estimate that the first fit is taken
    /// on (the input itself has zero residual).
    double pilot_tau = 0.1;
    int pilot_iters = 1;
    /// Mesh only: feature-aware tangential relaxation after the last outer
    /// iteration; 0 disables it.
    int relax_iters = 10;
    double relax_tau = 0.5;
    double crease_angle_deg = 30.0;

    /// Throws std::invalid_argument on out-of-range values.
    void validate() const;
};

nlohmann::json to_json(const DenoiseConfig& config);

/// Absolute values of every component of an edge field, row by row; the
/// scalar samples the prior is fitted to.
std::vector<double> gradient_samples(const Field& edge_grads);

struct DenoiseIteration {
    int outer = 0;
    int inner = 0;
    double beta = 0.0;
    double objective = 0.0; // splitting objective after the sweep
    double sigma = 0.0;
    double theta = 0.0;
    double p = 0.0;
    double lambda = 0.0;
    double rmse_vs_input = 0.0;
};

nlohmann::json to_json(const DenoiseIteration& it);

struct FieldDenoiseResult {
    Field x;
    HyperLaplacianParams params;
    std::vector<DenoiseIteration> trace;
};

/// Builds the regularization operator for the current estimate.
using OperatorAt = std::function<EdgeDifferentialOperator(const Field&)>;

/// Content-aware Lp denoising of an arbitrary field. For every outer
/// iteration: take the estimate (the pilot first, then the current X), build
/// the operator at it, fit (sigma, theta, p) unless fixed, set
/// lambda = theta sigma^2 / 2, then sweep psi-update / X-update inner_iters
/// times per penalty while the penalty grows from beta0 to beta_max.
/// `graph` is the difference operator the pilot smoothing runs on.
FieldDenoiseResult denoise_field(const EdgeDifferentialOperator& graph, const OperatorAt& op_at,
                                 const Field& x0, const DenoiseConfig& config);

/// Same with one fixed operator.
FieldDenoiseResult denoise_field(const EdgeDifferentialOperator& d, const Field& x0,
                                 const DenoiseConfig& config);

/// Moves vertices within their tangent plane towards the mean of their
/// neighbours. Vertices whose incident face normals split into two groups
/// (more than `crease_angle_deg` apart) slide along the crease towards the
/// mean of their two crease neighbours; corners and boundary vertices stay.
Field relax_tangential(const TriangleMesh& mesh, const Field& x, double tau, int iterations,
                       double crease_angle_deg = 30.0);

struct DenoiseResult {
    TriangleMesh mesh;
    HyperLaplacianParams params;
    std::vector<DenoiseIteration> trace;
};

/// Mesh denoising with the four-vertex area operator rebuilt at every outer
/// estimate, followed by relax_tangential. Meshes without interior edges
/// fall back to the difference operator.
DenoiseResult denoise(const TriangleMesh& noisy, const DenoiseConfig& config);

namespace reference {

/// Serial psi-update, the test reference for the OpenMP kernel.
Field psi_update(const Field& edge_grads, double lambda, double beta, double p);

/// Grid minimizer of (1/2)(x - d)^2 + tau x^p over x in [0, 2d]: a 1e-3
/// sweep, then a `step` sweep over the cells around x = 0 and around the
/// best coarse point.
double gst_grid_minimize(double d, double tau, double p, double step = 1e-6);

} // namespace reference

} // namespace dcv
