#pragma once

#include "dcv/mesh.hpp"

#include <json.hpp>

#include <span>
#include <vector>

namespace dcv {

/// Hyper-Laplacian shape (p, theta) and Gaussian noise level sigma of the MAP
/// denoising model. The gradient prior density per scalar component is
/// (p/2)(theta/2)^(1/p)/Gamma(1/p) * exp(-(theta/2)|x|^p).
struct HyperLaplacianParams {
    double p = 1.0;
    double theta = 1.0;
    double sigma = 0.0;

    /// Regularization weight theta*sigma^2/2.
    double lambda() const { return 0.5 * theta * sigma * sigma; }

    /// Throws std::invalid_argument unless 0 < p <= 1, theta > 0, sigma >= 0.
    void validate() const;
};

/// Magnitudes below this floor are raised to it inside sum |g|^p when p < 1.
inline constexpr double kMagnitudeFloor = 1e-12;

/// sum_i |g_i|^p with the floor applied for p < 1.
double sum_pow(std::span<const double> magnitudes, double p);

/// Negative log posterior of the joint model:
///   (n/2) log(2 pi sigma^2) + |X - X0|^2 / (2 sigma^2) + (theta/2) sum_i |(DX)_i|^p
///   + 3m (log Gamma(1/p) - log(p/2) - (1/p) log(theta/2)),
/// where |(DX)_i| is the Euclidean norm of edge i's difference vector.
/// Throws NumericError("degenerate likelihood") for sigma = 0 with X != X0.
double neg_log_posterior(const Field& x, const Field& x0, const EdgeDifferentialOperator& d,
                         const HyperLaplacianParams& params);

/// sqrt(|X0 - X|^2 / n), the closed-form minimizer in sigma.
double estimate_sigma(const Field& x, const Field& x0);

/// Shape part of the posterior for fixed gradients:
///   (theta/2) sum |g|^p + c (log Gamma(1/p) - log(p/2) - (1/p) log(theta/2)),
/// with c = components * m scalar gradient components (components = 3 for
/// vertex positions).
double prior_objective(std::span<const double> magnitudes, double p, double theta, int m,
                       int components = 3);

/// Stationary point of prior_objective in theta: 2 c / (p sum |g|^p).
/// Throws NumericError("flat gradient field") when every magnitude is zero.
double fit_theta_given_p(std::span<const double> magnitudes, double p, int m,
                         int components = 3);

struct PriorGridPoint {
    double p = 0.0;
    double theta = 0.0;
    double objective = 0.0;
};

struct PriorFit {
    HyperLaplacianParams params; // p and theta populated; sigma left at 0
    double objective = 0.0;
    std::vector<PriorGridPoint> grid;
};

/// The p search grid {0.05, 0.06, ..., 1.00}.
std::vector<double> p_grid();

/// Exhaustive search over p_grid() with theta profiled out by
/// fit_theta_given_p. Ties go to the larger p. Grid points are evaluated in
/// parallel; the result does not depend on the thread count.
PriorFit fit_p(std::span<const double> magnitudes, int m, int components = 3);

/// {p, theta, sigma, lambda, objective, grid: [{p, theta, objective}, ...]}
nlohmann::json to_json(const PriorFit& fit, double sigma);

} // namespace dcv
