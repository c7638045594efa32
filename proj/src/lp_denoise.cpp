#include "dcv/lp_denoise.hpp"

#include "dcv/errors.hpp"
#include "dcv/parallel.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace dcv {

namespace {

constexpr double kTargetTolerance = 1e-12;

Eigen::Index check_same_shape(const Field& a, const Field& b, const char* what)
{
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument(std::string(what) + ": dimension mismatch");
    return a.rows();
}

void shrink_row(const Field& g, Field& out, Eigen::Index i, double tau, double p)
{
    const double mag = g.row(i).norm();
    if (mag == 0.0) {
        out.row(i).setZero();
        return;
    }
    const double s = gst_shrink(mag, tau, p);
    out.row(i) = g.row(i) * (s / mag);
}

double dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    return blocked_sum(static_cast<std::size_t>(a.size()),
                       [&](std::size_t i) { return a[static_cast<Eigen::Index>(i)] * b[static_cast<Eigen::Index>(i)]; });
}

// y = (I + 2 beta D^T D) x for one column.
void system_times(const EdgeDifferentialOperator& d, double beta, const Eigen::VectorXd& x,
                  Eigen::VectorXd& y)
{
    const double w = 2.0 * beta;
    Eigen::VectorXd dx(d.rows());
#pragma omp parallel for schedule(static)
    for (int i = 0; i < d.rows(); ++i) {
        double s = 0.0;
        for (const auto& en : d.row(i))
            s += en.weight * x[en.col];
        dx[i] = s;
    }
#pragma omp parallel for schedule(static)
    for (int v = 0; v < d.cols(); ++v) {
        double s = 0.0;
        for (const auto& en : d.column(v))
            s += en.weight * dx[en.col];
        y[v] = x[v] + w * s;
    }
}

struct ColumnSolve {
    int iterations = 0;
    double relative_residual = 0.0;
};

ColumnSolve pcg(const EdgeDifferentialOperator& d, double beta, const Eigen::VectorXd& b,
                Eigen::VectorXd& x)
{
    const Eigen::Index n = b.size();
    const double b_norm = std::sqrt(dot(b, b));
    if (b_norm == 0.0) {
        x.setZero();
        return {};
    }
    Eigen::VectorXd inv_diag(n);
    for (Eigen::Index v = 0; v < n; ++v)
        inv_diag[v] = 1.0 / (1.0 + 2.0 * beta * d.normal_diagonal(static_cast<int>(v)));

    Eigen::VectorXd r(n), z(n), p(n), q(n);
    system_times(d, beta, x, q);
    r = b - q;
    z = r.cwiseProduct(inv_diag);
    p = z;
    double rz = dot(r, z);
    double r_norm = std::sqrt(dot(r, r));
    const int max_iters = static_cast<int>(std::min<Eigen::Index>(10 * n + 100, 100000));
    int it = 0;
    while (r_norm > kTargetTolerance * b_norm && it < max_iters) {
        system_times(d, beta, p, q);
        const double alpha = rz / dot(p, q);
        x += alpha * p;
        r -= alpha * q;
        z = r.cwiseProduct(inv_diag);
        const double rz_next = dot(r, z);
        p = z + (rz_next / rz) * p;
        rz = rz_next;
        r_norm = std::sqrt(dot(r, r));
        ++it;
    }
    // Report the true residual, not the recursively updated one.
    system_times(d, beta, x, q);
    return {it, std::sqrt(dot(b - q, b - q)) / b_norm};
}

} // namespace

double gst_threshold(double tau, double p)
{
    if (p >= 1.0)
        return tau;
    const double base = 2.0 * tau * (1.0 - p);
    if (base == 0.0)
        return 0.0;
    return std::pow(base, 1.0 / (2.0 - p)) + tau * p * std::pow(base, (p - 1.0) / (2.0 - p));
}

double gst_shrink(double d, double tau, double p)
{
    if (tau == 0.0)
        return d;
    if (p >= 1.0)
        return std::max(d - tau, 0.0);
    if (d <= gst_threshold(tau, p))
        return 0.0;
    double x = d;
    const double stop = 1e-12 * std::max(1.0, d);
    for (int k = 0; k < 50; ++k) {
        const double next = d - tau * p * std::pow(x, p - 1.0);
        const bool done = std::abs(next - x) <= stop;
        x = next;
        if (done)
            break;
    }
    return x;
}

Field psi_update(const Field& edge_grads, double lambda, double beta, double p)
{
    if (!(lambda >= 0.0) || !(beta > 0.0))
        throw std::invalid_argument("psi_update needs lambda >= 0 and beta > 0");
    if (lambda == 0.0)
        return edge_grads;
    const double tau = lambda / (2.0 * beta);
    Field out(edge_grads.rows(), edge_grads.cols());
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < edge_grads.rows(); ++i)
        shrink_row(edge_grads, out, i, tau, p);
    return out;
}

Field x_update(const Field& x0, const EdgeDifferentialOperator& d, const Field& psi, double beta,
               const Field* warm_start, SolveReport* report)
{
    if (!(beta > 0.0))
        throw std::invalid_argument("x_update needs beta > 0");
    if (x0.rows() != d.cols() || psi.rows() != d.rows() || psi.cols() != x0.cols())
        throw std::invalid_argument("x_update: dimension mismatch");
    if (warm_start != nullptr)
        check_same_shape(*warm_start, x0, "x_update warm start");

    const Field rhs = x0 + 2.0 * beta * d.apply_transpose(psi);
    Field x(x0.rows(), x0.cols());
    SolveReport local;
    for (Eigen::Index c = 0; c < x0.cols(); ++c) {
        const Eigen::VectorXd b = rhs.col(c);
        Eigen::VectorXd col = warm_start != nullptr ? Eigen::VectorXd(warm_start->col(c))
                                                    : Eigen::VectorXd(x0.col(c));
        const ColumnSolve s = pcg(d, beta, b, col);
        local.iterations += s.iterations;
        local.relative_residual = std::max(local.relative_residual, s.relative_residual);
        if (!(s.relative_residual <= kSolveTolerance)) {
            std::ostringstream msg;
            msg << "x_update: conjugate gradient stalled at relative residual "
                << s.relative_residual << " (column " << c << ", " << s.iterations
                << " iterations, tolerance " << kSolveTolerance << ")";
            throw NumericError(msg.str());
        }
        x.col(c) = col;
    }
    if (report != nullptr)
        *report = local;
    return x;
}

Field x_update_dense(const Field& x0, const EdgeDifferentialOperator& d, const Field& psi,
                     double beta)
{
    if (d.cols() > 500)
        throw std::invalid_argument("x_update_dense is limited to n <= 500");
    if (x0.rows() != d.cols() || psi.rows() != d.rows() || psi.cols() != x0.cols())
        throw std::invalid_argument("x_update_dense: dimension mismatch");
    const Eigen::MatrixXd dm = Eigen::MatrixXd(d.to_sparse());
    const Eigen::MatrixXd a =
        Eigen::MatrixXd::Identity(d.cols(), d.cols()) + 2.0 * beta * dm.transpose() * dm;
    const Eigen::MatrixXd rhs = Eigen::MatrixXd(x0) + 2.0 * beta * dm.transpose() * Eigen::MatrixXd(psi);
    const Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success)
        throw NumericError("x_update_dense: system is not positive definite");
    return llt.solve(rhs);
}

double splitting_objective(const Field& x, const Field& x0, const EdgeDifferentialOperator& d,
                           const Field& psi, double lambda, double beta, double p)
{
    check_same_shape(x, x0, "splitting_objective");
    const Field dx = d.apply(x);
    check_same_shape(dx, psi, "splitting_objective");
    const double fidelity = 0.5 * (x0 - x).squaredNorm();
    const double prior = blocked_sum(static_cast<std::size_t>(psi.rows()), [&](std::size_t i) {
        const double mag = psi.row(static_cast<Eigen::Index>(i)).norm();
        return p == 1.0 ? mag : std::pow(mag, p);
    });
    return fidelity + lambda * prior + beta * (dx - psi).squaredNorm();
}

double lp_objective(const Field& x, const Field& x0, const EdgeDifferentialOperator& d,
                    double lambda, double p)
{
    check_same_shape(x, x0, "lp_objective");
    const Field dx = d.apply(x);
    const double prior = blocked_sum(static_cast<std::size_t>(dx.rows()), [&](std::size_t i) {
        const double mag = dx.row(static_cast<Eigen::Index>(i)).norm();
        return p == 1.0 ? mag : std::pow(mag, p);
    });
    return 0.5 * (x0 - x).squaredNorm() + lambda * prior;
}

Field umbrella_smooth(const EdgeDifferentialOperator& d, const Field& x, double tau,
                      int iterations)
{
    if (x.rows() != d.cols())
        throw std::invalid_argument("umbrella_smooth: dimension mismatch");
    Field cur = x;
    for (int it = 0; it < iterations; ++it) {
        const Field lap = d.apply_normal(cur);
        Field next(cur.rows(), cur.cols());
#pragma omp parallel for schedule(static)
        for (Eigen::Index v = 0; v < cur.rows(); ++v) {
            const double deg = d.normal_diagonal(static_cast<int>(v));
            if (deg == 0.0)
                next.row(v) = cur.row(v);
            else
                next.row(v) = cur.row(v) - (tau / deg) * lap.row(v);
        }
        cur = std::move(next);
    }
    return cur;
}

void DenoiseConfig::validate() const
{
    if (!(beta0 > 0.0))
        throw std::invalid_argument("beta0 must be > 0");
    if (!(beta_growth > 1.0))
        throw std::invalid_argument("beta_growth must be > 1");
    if (!(beta_max >= beta0))
        throw std::invalid_argument("beta_max must be >= beta0");
    if (outer_iters < 1 || inner_iters < 1)
        throw std::invalid_argument("iteration counts must be >= 1");
    if (pilot_iters < 0 || relax_iters < 0)
        throw std::invalid_argument("pass counts must be >= 0");
    if (!(pilot_tau > 0.0 && pilot_tau <= 1.0) || !(relax_tau > 0.0 && relax_tau <= 1.0))
        throw std::invalid_argument("smoothing steps must lie in (0, 1]");
    if (!(crease_angle_deg > 0.0 && crease_angle_deg < 180.0))
        throw std::invalid_argument("crease_angle_deg must lie in (0, 180)");
    if (fixed_params)
        fixed_params->validate();
}

nlohmann::json to_json(const DenoiseConfig& c)
{
    nlohmann::json j = {{"beta0", c.beta0},
                        {"beta_growth", c.beta_growth},
                        {"beta_max", c.beta_max},
                        {"outer_iters", c.outer_iters},
                        {"inner_iters", c.inner_iters},
                        {"refit_p_each_outer", c.refit_p_each_outer},
                        {"pilot_tau", c.pilot_tau},
                        {"pilot_iters", c.pilot_iters},
                        {"relax_iters", c.relax_iters},
                        {"relax_tau", c.relax_tau},
                        {"crease_angle_deg", c.crease_angle_deg}};
    if (c.fixed_params)
        j["fixed_params"] = {{"p", c.fixed_params->p},
                             {"theta", c.fixed_params->theta},
                             {"sigma", c.fixed_params->sigma}};
    else
        j["fixed_params"] = nullptr;
    return j;
}

std::vector<double> gradient_samples(const Field& edge_grads)
{
    std::vector<double> out(static_cast<std::size_t>(edge_grads.size()));
    for (Eigen::Index i = 0; i < edge_grads.rows(); ++i)
        for (Eigen::Index c = 0; c < edge_grads.cols(); ++c)
            out[static_cast<std::size_t>(i * edge_grads.cols() + c)] = std::abs(edge_grads(i, c));
    return out;
}

nlohmann::json to_json(const DenoiseIteration& it)
{
    return {{"outer", it.outer},   {"inner", it.inner},  {"beta", it.beta},
            {"objective", it.objective}, {"sigma", it.sigma}, {"theta", it.theta},
            {"p", it.p},           {"lambda", it.lambda}, {"rmse_vs_input", it.rmse_vs_input}};
}

FieldDenoiseResult denoise_field(const EdgeDifferentialOperator& graph, const OperatorAt& op_at,
                                 const Field& x0, const DenoiseConfig& config)
{
    config.validate();
    if (x0.rows() != graph.cols())
        throw std::invalid_argument("denoise: field rows do not match the operator");
    const double n = static_cast<double>(x0.rows());

    FieldDenoiseResult result;
    result.x = x0;
    HyperLaplacianParams params;
    if (config.fixed_params)
        params = *config.fixed_params;

    for (int outer = 0; outer < config.outer_iters; ++outer) {
        const Field estimate =
            outer > 0 ? result.x : umbrella_smooth(graph, x0, config.pilot_tau, config.pilot_iters);
        const EdgeDifferentialOperator d = op_at(estimate);
        if (d.cols() != graph.cols())
            throw std::invalid_argument("denoise: operator columns do not match the field");
        if (!config.fixed_params) {
            params.sigma = estimate_sigma(estimate, x0);
            const auto samples = gradient_samples(d.apply(estimate));
            const int components = static_cast<int>(x0.cols());
            if (outer == 0 || config.refit_p_each_outer) {
                const PriorFit fit = fit_p(samples, d.rows(), components);
                params.p = fit.params.p;
                params.theta = fit.params.theta;
            } else {
                params.theta = fit_theta_given_p(samples, params.p, d.rows(), components);
            }
        }
        const double lambda = params.lambda();

        Field& x = result.x;
        for (double beta = config.beta0;;
             beta = std::min(beta * config.beta_growth, config.beta_max)) {
            for (int inner = 0; inner < config.inner_iters; ++inner) {
                const Field psi = psi_update(d.apply(x), lambda, beta, params.p);
                x = x_update(x0, d, psi, beta, &x);
                DenoiseIteration rec;
                rec.outer = outer;
                rec.inner = inner;
                rec.beta = beta;
                rec.objective = splitting_objective(x, x0, d, psi, lambda, beta, params.p);
                rec.sigma = params.sigma;
                rec.theta = params.theta;
                rec.p = params.p;
                rec.lambda = lambda;
                rec.rmse_vs_input = std::sqrt((x - x0).squaredNorm() / n);
                result.trace.push_back(rec);
            }
            if (beta >= config.beta_max)
                break;
        }
    }
    result.params = params;
    return result;
}

FieldDenoiseResult denoise_field(const EdgeDifferentialOperator& d, const Field& x0,
                                 const DenoiseConfig& config)
{
    return denoise_field(d, [&](const Field&) { return d; }, x0, config);
}

Field relax_tangential(const TriangleMesh& mesh, const Field& x, double tau, int iterations,
                       double crease_angle_deg)
{
    if (x.rows() != mesh.num_vertices() || x.cols() != 3)
        throw std::invalid_argument("relax_tangential: dimension mismatch");
    const int nv = mesh.num_vertices();
    std::vector<std::vector<int>> vertex_faces(static_cast<std::size_t>(nv));
    for (int f = 0; f < mesh.num_faces(); ++f)
        for (int v : mesh.faces()[static_cast<std::size_t>(f)])
            vertex_faces[static_cast<std::size_t>(v)].push_back(f);
    std::vector<std::vector<int>> vertex_edges(static_cast<std::size_t>(nv));
    std::vector<char> pinned(static_cast<std::size_t>(nv), 0);
    for (int e = 0; e < mesh.num_edges(); ++e) {
        const Edge& ed = mesh.edges()[static_cast<std::size_t>(e)];
        vertex_edges[static_cast<std::size_t>(ed.a)].push_back(e);
        vertex_edges[static_cast<std::size_t>(ed.b)].push_back(e);
        if (mesh.edge_face_count(e) != 2)
            pinned[static_cast<std::size_t>(ed.a)] = pinned[static_cast<std::size_t>(ed.b)] = 1;
    }
    const double cos_t = std::cos(crease_angle_deg * std::numbers::pi / 180.0);

    Field cur = x;
    std::vector<Eigen::Vector3d> normals(static_cast<std::size_t>(mesh.num_faces()));
    for (int it = 0; it < iterations; ++it) {
        for (int f = 0; f < mesh.num_faces(); ++f) {
            const Face& fc = mesh.faces()[static_cast<std::size_t>(f)];
            const Eigen::Vector3d a = cur.row(fc[0]).transpose();
            const Eigen::Vector3d b = cur.row(fc[1]).transpose();
            const Eigen::Vector3d c = cur.row(fc[2]).transpose();
            const Eigen::Vector3d nrm = (b - a).cross(c - a);
            const double len = nrm.norm();
            normals[static_cast<std::size_t>(f)] = len > 0.0 ? Eigen::Vector3d(nrm / len) : Eigen::Vector3d::Zero();
        }
        Field next = cur;
#pragma omp parallel for schedule(static)
        for (int v = 0; v < nv; ++v) {
            const auto& faces = vertex_faces[static_cast<std::size_t>(v)];
            if (pinned[static_cast<std::size_t>(v)] || faces.empty())
                continue;
            // Group the incident face normals around the first one and the
            // first one outside that group.
            const Eigen::Vector3d n1 = normals[static_cast<std::size_t>(faces[0])];
            Eigen::Vector3d n2 = Eigen::Vector3d::Zero();
            Eigen::Vector3d s1 = Eigen::Vector3d::Zero(), s2 = Eigen::Vector3d::Zero();
            bool two = false, corner = false;
            for (int f : faces) {
                const Eigen::Vector3d& nf = normals[static_cast<std::size_t>(f)];
                if (nf.dot(n1) > cos_t) {
                    s1 += nf;
                } else if (!two) {
                    two = true;
                    n2 = nf;
                    s2 += nf;
                } else if (nf.dot(n2) > cos_t) {
                    s2 += nf;
                } else {
                    corner = true;
                }
            }
            if (corner || s1.norm() == 0.0)
                continue;
            const Eigen::Vector3d p = cur.row(v).transpose();
            Eigen::Vector3d move = Eigen::Vector3d::Zero();
            if (!two) {
                int count = 0;
                for (int e : vertex_edges[static_cast<std::size_t>(v)]) {
                    const Edge& ed = mesh.edges()[static_cast<std::size_t>(e)];
                    move += cur.row(ed.a == v ? ed.b : ed.a).transpose() - p;
                    ++count;
                }
                move /= count;
                const Eigen::Vector3d nrm = s1.normalized();
                move -= nrm * nrm.dot(move);
            } else {
                int count = 0;
                for (int e : vertex_edges[static_cast<std::size_t>(v)]) {
                    const auto ef = mesh.edge_faces(e);
                    if (normals[static_cast<std::size_t>(ef[0])].dot(normals[static_cast<std::size_t>(ef[1])]) > cos_t)
                        continue;
                    const Edge& ed = mesh.edges()[static_cast<std::size_t>(e)];
                    move += cur.row(ed.a == v ? ed.b : ed.a).transpose() - p;
                    ++count;
                }
                if (count != 2 || s2.norm() == 0.0)
                    continue;
                const Eigen::Vector3d dir = s1.normalized().cross(s2.normalized());
                if (dir.norm() == 0.0)
                    continue;
                const Eigen::Vector3d t = dir.normalized();
                move = t * t.dot(move / 2.0);
            }
            next.row(v) += tau * move.transpose();
        }
        cur = std::move(next);
    }
    return cur;
}

DenoiseResult denoise(const TriangleMesh& noisy, const DenoiseConfig& config)
{
    const EdgeDifferentialOperator graph = build_edge_operator(noisy);
    bool has_interior = false;
    for (int e = 0; e < noisy.num_edges() && !has_interior; ++e)
        has_interior = noisy.edge_face_count(e) == 2;
    const OperatorAt op_at = [&](const Field& at) {
        return has_interior ? build_area_edge_operator(noisy, &at) : graph;
    };
    FieldDenoiseResult r = denoise_field(graph, op_at, noisy.vertices(), config);
    Field x = config.relax_iters > 0 ? relax_tangential(noisy, r.x, config.relax_tau,
                                                        config.relax_iters, config.crease_angle_deg)
                                     : std::move(r.x);
    return {noisy.with_vertices(std::move(x)), r.params, std::move(r.trace)};
}

namespace reference {

Field psi_update(const Field& edge_grads, double lambda, double beta, double p)
{
    if (lambda == 0.0)
        return edge_grads;
    const double tau = lambda / (2.0 * beta);
    Field out(edge_grads.rows(), edge_grads.cols());
    for (Eigen::Index i = 0; i < edge_grads.rows(); ++i)
        shrink_row(edge_grads, out, i, tau, p);
    return out;
}

double gst_grid_minimize(double d, double tau, double p, double step)
{
    const auto f = [&](double x) { return 0.5 * (x - d) * (x - d) + tau * std::pow(x, p); };
    const double hi = 2.0 * d;
    if (hi <= 0.0)
        return 0.0;
    const double coarse = 1e-3;
    const long coarse_n = static_cast<long>(std::ceil(hi / coarse));
    double best_x = 0.0;
    double best_f = f(0.0);
    for (long k = 1; k <= coarse_n; ++k) {
        const double x = std::min(hi, k * coarse);
        const double v = f(x);
        if (v < best_f) {
            best_f = v;
            best_x = x;
        }
    }
    const auto refine = [&](double lo, double up) {
        lo = std::max(0.0, lo);
        up = std::min(hi, up);
        const long n = static_cast<long>(std::ceil((up - lo) / step));
        for (long k = 0; k <= n; ++k) {
            const double x = std::min(up, lo + k * step);
            const double v = f(x);
            if (v < best_f) {
                best_f = v;
                best_x = x;
            }
        }
    };
    const double centre = best_x;
    refine(0.0, 2.0 * coarse);
    refine(centre - 2.0 * coarse, centre + 2.0 * coarse);
    return best_x;
}

} // namespace reference

} // namespace dcv
