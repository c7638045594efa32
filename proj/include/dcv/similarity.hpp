#pragma once

#include "dcv/image.hpp"

#include <cstdint>
#include <vector>

namespace dcv {

struct WindowParams {
    double sigma_w = 1.5;
    int radius = 3;
    /// Added to both variances.
    double eps = 1e-4;

    /// Throws std::invalid_argument unless sigma_w > 0, radius >= 0, eps >= 0.
    void validate() const;
};

/// Windowed moments of an image pair at every pixel. A pixel is `active`
/// when both images are valid there and its window holds some valid mass;
/// inactive pixels carry mu = 0, v = eps, v12 = 0.
struct WindowStats {
    int width = 0;
    int height = 0;
    double eps = 0.0;
    std::vector<double> mu1, mu2, v1, v2, v12, omega;
    std::vector<std::uint8_t> active;
};

/// mu_i = (G * I_i) / omega, v_i = (G * I_i^2) / omega - mu_i^2 + eps,
/// v12 = (G * I1 I2) / omega - mu1 mu2, omega = G * mask, where the mask is
/// the joint validity of the two images.
WindowStats window_stats(const ScalarImage& i1, const ScalarImage& i2, const WindowParams& params = {});

/// m = v12 / sqrt(v1 v2); inactive pixels are 0 and masked out.
ScalarImage zncc(const WindowStats& stats);

/// -sum of m over active pixels, the quantity whose gradient in I2 is d2m.
double dissimilarity_energy(const ScalarImage& i1, const ScalarImage& i2,
                            const WindowParams& params = {});

struct SimilarityDerivativeField {
    ScalarImage alpha;
    ScalarImage beta_coef;
    ScalarImage gamma;
    ScalarImage d2m;
    double kappa = 0.0;
};

/// Gradient of dissimilarity_energy with respect to every pixel of I2:
///   alpha = G * (-1 / (omega sqrt(v1 v2)))
///   beta_coef = G * (m / (omega v2))
///   gamma = G * (mu1 / (omega sqrt(v1 v2)) - mu2 m / (omega v2))
///   d2m = alpha I1 + beta_coef I2 + gamma
/// with the convolutions taken over active pixels. Pixels where either
/// image is invalid get d2m = 0.
SimilarityDerivativeField zncc_derivative(const ScalarImage& i1, const ScalarImage& i2,
                                          const WindowStats& stats, const WindowParams& params = {});

/// zncc_derivative plus kappa G * ((v2 - v1) / v2), which pushes the
/// variance of I2 towards that of I1.
SimilarityDerivativeField detail_preserving_derivative(const ScalarImage& i1, const ScalarImage& i2,
                                                       const WindowStats& stats, double kappa,
                                                       const WindowParams& params = {});

/// Guided filter of `input` (I1) with `guidance` (I2):
/// a = v12 / v2, b = mu1 - a mu2, Q = (G * a) / omega I2 + (G * b) / omega.
ScalarImage guided_filter(const ScalarImage& input, const ScalarImage& guidance,
                          const WindowParams& params = {});

struct BridgeResidual {
    /// Max |LHS - RHS| of the exact identity with v1 replaced by v2:
    /// d2m + (G * 1 / (omega v2)) I1 = (G * v12 / (omega v2^2)) I2
    ///                               + G * ((v2 mu1 - v12 mu2) / (omega v2^2)).
    double exact = 0.0;
    /// Max |I1 + v2 d2m - Q| with the unforced derivative and the guided filter.
    double approximate = 0.0;
    /// max I1 - min I1 over the same pixels.
    double range = 0.0;
    int pixels = 0;
};

/// Evaluated over interior pixels: active, and at least two window radii
/// from the border.
BridgeResidual bridge_identity_residual(const ScalarImage& i1, const ScalarImage& i2,
                                        const WindowParams& params = {});

namespace reference {

/// Serial window_stats with direct 2D sums.
WindowStats window_stats(const ScalarImage& i1, const ScalarImage& i2, const WindowParams& params = {});

} // namespace reference

} // namespace dcv
