#include "dcv/similarity.hpp"

#include "dcv/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dcv {

namespace {

using Convolve = std::vector<double> (*)(std::span<const double>, std::span<const std::uint8_t>, int,
                                         int, const GaussianKernel&);

std::vector<std::uint8_t> joint_mask(const ScalarImage& a, const ScalarImage& b)
{
    std::vector<std::uint8_t> m(a.size());
    for (std::size_t i = 0; i < m.size(); ++i)
        m[i] = a.mask()[i] != 0 && b.mask()[i] != 0 ? 1 : 0;
    return m;
}

WindowStats compute_stats(const ScalarImage& i1, const ScalarImage& i2, const WindowParams& params,
                          Convolve conv)
{
    params.validate();
    if (!i1.same_shape(i2))
        throw std::invalid_argument("window_stats: image dimensions differ");
    const int w = i1.width();
    const int h = i1.height();
    const std::size_t n = i1.size();
    const GaussianKernel kernel(params.sigma_w, params.radius);
    const std::vector<std::uint8_t> mask = joint_mask(i1, i2);

    std::vector<double> ones(n, 1.0), sq1(n), sq2(n), cross(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = i1.data()[i];
        const double b = i2.data()[i];
        sq1[i] = a * a;
        sq2[i] = b * b;
        cross[i] = a * b;
    }
    WindowStats s;
    s.width = w;
    s.height = h;
    s.eps = params.eps;
    s.omega = conv(ones, mask, w, h, kernel);
    const std::vector<double> g1 = conv(i1.data(), mask, w, h, kernel);
    const std::vector<double> g2 = conv(i2.data(), mask, w, h, kernel);
    const std::vector<double> g11 = conv(sq1, mask, w, h, kernel);
    const std::vector<double> g22 = conv(sq2, mask, w, h, kernel);
    const std::vector<double> g12 = conv(cross, mask, w, h, kernel);

    s.mu1.assign(n, 0.0);
    s.mu2.assign(n, 0.0);
    s.v1.assign(n, params.eps);
    s.v2.assign(n, params.eps);
    s.v12.assign(n, 0.0);
    s.active.assign(n, 0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(n); ++k) {
        const auto i = static_cast<std::size_t>(k);
        const double om = s.omega[i];
        if (mask[i] == 0 || !(om > 0.0))
            continue;
        const double m1 = g1[i] / om;
        const double m2 = g2[i] / om;
        s.mu1[i] = m1;
        s.mu2[i] = m2;
        s.v1[i] = g11[i] / om - m1 * m1 + params.eps;
        s.v2[i] = g22[i] / om - m2 * m2 + params.eps;
        s.v12[i] = g12[i] / om - m1 * m2;
        s.active[i] = 1;
    }
    return s;
}

void check_stats(const ScalarImage& i1, const ScalarImage& i2, const WindowStats& stats)
{
    if (!i1.same_shape(i2) || stats.width != i1.width() || stats.height != i1.height())
        throw std::invalid_argument("similarity: image and statistics dimensions differ");
}

ScalarImage from_values(int w, int h, std::vector<double> values, std::span<const std::uint8_t> mask)
{
    ScalarImage img(w, h, std::move(values));
    std::copy(mask.begin(), mask.end(), img.mask().begin());
    return img;
}

// G * f over active pixels.
std::vector<double> smooth_active(const std::vector<double>& f, const WindowStats& s,
                                  const GaussianKernel& kernel)
{
    return masked_convolve(f, s.active, s.width, s.height, kernel);
}

SimilarityDerivativeField derivative(const ScalarImage& i1, const ScalarImage& i2,
                                     const WindowStats& s, const WindowParams& params, double kappa,
                                     bool force_equal_variance)
{
    params.validate();
    check_stats(i1, i2, s);
    if (!(kappa >= 0.0))
        throw std::invalid_argument("kappa must be >= 0");
    const std::size_t n = i1.size();
    const GaussianKernel kernel(params.sigma_w, params.radius);

    std::vector<double> fa(n, 0.0), fb(n, 0.0), fc(n, 0.0), fk(n, 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(n); ++k) {
        const auto i = static_cast<std::size_t>(k);
        if (s.active[i] == 0)
            continue;
        const double v1 = force_equal_variance ? s.v2[i] : s.v1[i];
        const double root = std::sqrt(v1 * s.v2[i]);
        const double m = s.v12[i] / root;
        const double om = s.omega[i];
        fa[i] = -1.0 / (om * root);
        fb[i] = m / (om * s.v2[i]);
        fc[i] = s.mu1[i] / (om * root) - s.mu2[i] * m / (om * s.v2[i]);
        fk[i] = (s.v2[i] - v1) / s.v2[i];
    }
    const std::vector<double> alpha = smooth_active(fa, s, kernel);
    const std::vector<double> beta = smooth_active(fb, s, kernel);
    const std::vector<double> gamma = smooth_active(fc, s, kernel);
    std::vector<double> extra;
    if (kappa > 0.0)
        extra = smooth_active(fk, s, kernel);

    const std::vector<std::uint8_t> mask = joint_mask(i1, i2);
    std::vector<double> d2m(n, 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(n); ++k) {
        const auto i = static_cast<std::size_t>(k);
        if (mask[i] == 0)
            continue;
        double v = alpha[i] * i1.data()[i] + beta[i] * i2.data()[i] + gamma[i];
        if (kappa > 0.0)
            v += kappa * extra[i];
        d2m[i] = v;
    }
    const int w = i1.width();
    const int h = i1.height();
    SimilarityDerivativeField out;
    out.alpha = from_values(w, h, alpha, mask);
    out.beta_coef = from_values(w, h, beta, mask);
    out.gamma = from_values(w, h, gamma, mask);
    out.d2m = from_values(w, h, std::move(d2m), mask);
    out.kappa = kappa;
    return out;
}

bool interior(const WindowStats& s, int x, int y, int margin)
{
    return x >= margin && y >= margin && x < s.width - margin && y < s.height - margin &&
           s.active[static_cast<std::size_t>(y) * static_cast<std::size_t>(s.width) +
                    static_cast<std::size_t>(x)] != 0;
}

} // namespace

void WindowParams::validate() const
{
    if (!(sigma_w > 0.0))
        throw std::invalid_argument("sigma_w must be > 0");
    if (radius < 0)
        throw std::invalid_argument("window radius must be >= 0");
    if (!(eps >= 0.0))
        throw std::invalid_argument("eps must be >= 0");
}

WindowStats window_stats(const ScalarImage& i1, const ScalarImage& i2, const WindowParams& params)
{
    return compute_stats(i1, i2, params, &masked_convolve);
}

ScalarImage zncc(const WindowStats& s)
{
    const std::size_t n = s.active.size();
    std::vector<double> m(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        if (s.active[i] != 0)
            m[i] = s.v12[i] / std::sqrt(s.v1[i] * s.v2[i]);
    return from_values(s.width, s.height, std::move(m), s.active);
}

double dissimilarity_energy(const ScalarImage& i1, const ScalarImage& i2, const WindowParams& params)
{
    const WindowStats s = window_stats(i1, i2, params);
    return -blocked_sum(s.active.size(), [&](std::size_t i) {
        return s.active[i] != 0 ? s.v12[i] / std::sqrt(s.v1[i] * s.v2[i]) : 0.0;
    });
}

SimilarityDerivativeField zncc_derivative(const ScalarImage& i1, const ScalarImage& i2,
                                          const WindowStats& stats, const WindowParams& params)
{
    return derivative(i1, i2, stats, params, 0.0, false);
}

SimilarityDerivativeField detail_preserving_derivative(const ScalarImage& i1, const ScalarImage& i2,
                                                       const WindowStats& stats, double kappa,
                                                       const WindowParams& params)
{
    return derivative(i1, i2, stats, params, kappa, false);
}

ScalarImage guided_filter(const ScalarImage& input, const ScalarImage& guidance,
                          const WindowParams& params)
{
    const WindowStats s = window_stats(input, guidance, params);
    const GaussianKernel kernel(params.sigma_w, params.radius);
    const std::size_t n = input.size();
    std::vector<double> a(n, 0.0), b(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (s.active[i] == 0)
            continue;
        a[i] = s.v12[i] / s.v2[i];
        b[i] = s.mu1[i] - a[i] * s.mu2[i];
    }
    const std::vector<double> ga = smooth_active(a, s, kernel);
    const std::vector<double> gb = smooth_active(b, s, kernel);
    std::vector<double> q(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        if (s.active[i] != 0)
            q[i] = (ga[i] * guidance.data()[i] + gb[i]) / s.omega[i];
    return from_values(input.width(), input.height(), std::move(q), s.active);
}

BridgeResidual bridge_identity_residual(const ScalarImage& i1, const ScalarImage& i2,
                                        const WindowParams& params)
{
    const WindowStats s = window_stats(i1, i2, params);
    const GaussianKernel kernel(params.sigma_w, params.radius);
    const std::size_t n = i1.size();

    const SimilarityDerivativeField forced = derivative(i1, i2, s, params, 0.0, true);
    std::vector<double> inv(n, 0.0), lin(n, 0.0), off(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (s.active[i] == 0)
            continue;
        const double om = s.omega[i];
        const double v2 = s.v2[i];
        inv[i] = 1.0 / (om * v2);
        lin[i] = s.v12[i] / (om * v2 * v2);
        off[i] = (v2 * s.mu1[i] - s.v12[i] * s.mu2[i]) / (om * v2 * v2);
    }
    const std::vector<double> g_inv = smooth_active(inv, s, kernel);
    const std::vector<double> g_lin = smooth_active(lin, s, kernel);
    const std::vector<double> g_off = smooth_active(off, s, kernel);

    const SimilarityDerivativeField plain = derivative(i1, i2, s, params, 0.0, false);
    const ScalarImage q = guided_filter(i1, i2, params);

    BridgeResidual r;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    const int margin = 2 * params.radius;
    for (int y = 0; y < s.height; ++y) {
        for (int x = 0; x < s.width; ++x) {
            if (!interior(s, x, y, margin))
                continue;
            const std::size_t i = i1.index(x, y);
            const double lhs = forced.d2m.data()[i] + g_inv[i] * i1.data()[i];
            const double rhs = g_lin[i] * i2.data()[i] + g_off[i];
            r.exact = std::max(r.exact, std::abs(lhs - rhs));
            const double approx = i1.data()[i] + s.v2[i] * plain.d2m.data()[i];
            r.approximate = std::max(r.approximate, std::abs(approx - q.data()[i]));
            lo = std::min(lo, i1.data()[i]);
            hi = std::max(hi, i1.data()[i]);
            ++r.pixels;
        }
    }
    r.range = r.pixels > 0 ? hi - lo : 0.0;
    return r;
}

namespace reference {

WindowStats window_stats(const ScalarImage& i1, const ScalarImage& i2, const WindowParams& params)
{
    return compute_stats(i1, i2, params, &reference::masked_convolve);
}

} // namespace reference

} // namespace dcv
