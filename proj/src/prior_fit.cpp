#include "dcv/prior_fit.hpp"

#include "dcv/errors.hpp"
#include "dcv/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dcv {

void HyperLaplacianParams::validate() const
{
    if (!(p > 0.0 && p <= 1.0))
        throw std::invalid_argument("hyper-Laplacian p must be in (0, 1], got " + std::to_string(p));
    if (!(theta > 0.0) || !std::isfinite(theta))
        throw std::invalid_argument("hyper-Laplacian theta must be positive and finite");
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
        throw std::invalid_argument("noise sigma must be >= 0");
}

double sum_pow(std::span<const double> magnitudes, double p)
{
    return blocked_sum(magnitudes.size(), [&](std::size_t i) {
        double g = magnitudes[i];
        if (p < 1.0)
            g = std::max(g, kMagnitudeFloor);
        return p == 1.0 ? g : std::pow(g, p);
    });
}

double neg_log_posterior(const Field& x, const Field& x0, const EdgeDifferentialOperator& d,
                         const HyperLaplacianParams& params)
{
    params.validate();
    if (x.rows() != x0.rows() || x.cols() != x0.cols() || x.rows() != d.cols())
        throw std::invalid_argument("neg_log_posterior: dimension mismatch");
    const double n = static_cast<double>(x.rows());
    const double residual = (x - x0).squaredNorm();
    const double s2 = params.sigma * params.sigma;

    double fidelity = 0.0;
    if (s2 == 0.0) {
        if (residual > 0.0)
            throw NumericError("degenerate likelihood");
        fidelity = -std::numeric_limits<double>::infinity();
    } else {
        fidelity = 0.5 * n * std::log(2.0 * std::numbers::pi * s2) + residual / (2.0 * s2);
    }
    const auto mags = row_norms(d.apply(x));
    return fidelity + prior_objective(mags, params.p, params.theta, d.rows());
}

double estimate_sigma(const Field& x, const Field& x0)
{
    if (x.rows() != x0.rows() || x.cols() != x0.cols())
        throw std::invalid_argument("estimate_sigma: dimension mismatch");
    if (x.rows() == 0)
        return 0.0;
    return std::sqrt((x0 - x).squaredNorm() / static_cast<double>(x.rows()));
}

double prior_objective(std::span<const double> magnitudes, double p, double theta, int m,
                       int components)
{
    const double c = static_cast<double>(components) * m;
    const double s = sum_pow(magnitudes, p);
    return 0.5 * theta * s +
           c * (std::lgamma(1.0 / p) - std::log(0.5 * p) - std::log(0.5 * theta) / p);
}

double fit_theta_given_p(std::span<const double> magnitudes, double p, int m, int components)
{
    if (!(p > 0.0 && p <= 1.0))
        throw std::invalid_argument("p must be in (0, 1]");
    const bool flat = std::all_of(magnitudes.begin(), magnitudes.end(),
                                  [](double g) { return !(g > 0.0); });
    if (flat)
        throw NumericError("flat gradient field");
    const double c = static_cast<double>(components) * m;
    return 2.0 * c / (p * sum_pow(magnitudes, p));
}

std::vector<double> p_grid()
{
    std::vector<double> grid;
    for (int k = 5; k <= 100; ++k)
        grid.push_back(k / 100.0);
    return grid;
}

PriorFit fit_p(std::span<const double> magnitudes, int m, int components)
{
    if (magnitudes.empty())
        throw std::invalid_argument("fit_p: empty gradient sample");
    for (double g : magnitudes)
        if (!(g >= 0.0))
            throw std::invalid_argument("fit_p: gradient magnitudes must be >= 0");
    if (std::none_of(magnitudes.begin(), magnitudes.end(), [](double g) { return g > 0.0; }))
        throw NumericError("flat gradient field");

    const auto grid_p = p_grid();
    PriorFit fit;
    fit.grid.resize(grid_p.size());
    const double c = static_cast<double>(components) * m;
    // sum_pow nests a blocked reduction; inside this region it runs on one
    // thread with the same block partition, so values are thread-count independent.
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(grid_p.size()); ++k) {
        const double p = grid_p[static_cast<std::size_t>(k)];
        const double s = sum_pow(magnitudes, p);
        const double theta = 2.0 * c / (p * s);
        const double obj = 0.5 * theta * s +
                           c * (std::lgamma(1.0 / p) - std::log(0.5 * p) - std::log(0.5 * theta) / p);
        fit.grid[static_cast<std::size_t>(k)] = {p, theta, obj};
    }

    std::size_t best = 0;
    for (std::size_t k = 1; k < fit.grid.size(); ++k)
        if (fit.grid[k].objective <= fit.grid[best].objective)
            best = k;
    fit.params.p = fit.grid[best].p;
    fit.params.theta = fit.grid[best].theta;
    fit.objective = fit.grid[best].objective;
    return fit;
}

nlohmann::json to_json(const PriorFit& fit, double sigma)
{
    HyperLaplacianParams params = fit.params;
    params.sigma = sigma;
    nlohmann::json grid = nlohmann::json::array();
    for (const auto& g : fit.grid)
        grid.push_back({{"p", g.p}, {"theta", g.theta}, {"objective", g.objective}});
    return {{"p", params.p},           {"theta", params.theta},
            {"sigma", sigma},          {"lambda", params.lambda()},
            {"objective", fit.objective}, {"grid", std::move(grid)}};
}

} // namespace dcv
