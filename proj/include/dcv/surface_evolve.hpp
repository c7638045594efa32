#pragma once

#include "dcv/image.hpp"
#include "dcv/lp_denoise.hpp"
#include "dcv/similarity.hpp"

#include <Eigen/Core>
#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace dcv {

/// Pinhole camera; a world point X maps to camera coordinates R X + t.
struct Camera {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
    Eigen::Vector3d t = Eigen::Vector3d::Zero();

    /// Throws std::invalid_argument unless the focal lengths are positive
    /// and R is orthonormal with determinant 1 to 1e-10.
    void validate() const;
    /// Same camera for an image downsampled by `factor`.
    Camera scaled(double factor) const;
};

/// Reference and auxiliary intrinsics plus the pose taking reference camera
/// coordinates to auxiliary camera coordinates.
struct CameraPair {
    Camera reference; // pose unused
    Camera auxiliary; // pose unused
    Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
    Eigen::Vector3d t = Eigen::Vector3d::Zero();

    static CameraPair from_cameras(const Camera& reference, const Camera& auxiliary);
    void validate() const;
    CameraPair scaled(double factor) const;
};

/// Position in the auxiliary image of reference pixel (u, v) at depth d,
/// with its derivative in d.
struct Warp {
    double u = 0.0;
    double v = 0.0;
    double du_dd = 0.0;
    double dv_dd = 0.0;
    bool in_front = false;
};

Warp warp_pixel(const CameraPair& cams, double u, double v, double depth);

/// Per-pixel depth along the reference optical axis.
struct DepthMap {
    int width = 0;
    int height = 0;
    std::vector<double> depth;
    int reference_view = 0;

    DepthMap() = default;
    DepthMap(int w, int h, double fill);

    double& at(int x, int y) { return depth[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return depth[static_cast<std::size_t>(y) * width + x]; }

    /// Throws std::invalid_argument on non-positive or non-finite depths or
    /// a size mismatch.
    void validate() const;
};

/// Auxiliary image resampled through the depth map. Pixels that land
/// outside the auxiliary frame or behind its camera are masked invalid.
ScalarImage predict_image(const ScalarImage& aux, const DepthMap& depth, const CameraPair& cams);

/// -sum of ZNCC between the reference and the predicted image.
double data_energy(const ScalarImage& ref, const ScalarImage& aux, const DepthMap& depth,
                   const CameraPair& cams, const WindowParams& window = {});

/// Gradient of data_energy in every depth value, with the kappa term of
/// detail_preserving_derivative in the first factor:
/// d2m'(p) * grad I_aux(warp(p)) . d warp(p) / d depth.
std::vector<double> data_gradient(const ScalarImage& ref, const ScalarImage& aux,
                                  const DepthMap& depth, const CameraPair& cams, double kappa,
                                  const WindowParams& window = {});

enum class Regularizer { content_aware_lp, isotropic, none };

Regularizer parse_regularizer(const std::string& name);
std::string to_string(Regularizer r);

struct EvolveConfig {
    /// Gradient step; 0 selects 0.005 * mean depth / max |gradient| at the
    /// coarsest level.
    double eta = 0.0;
    int levels = 3;
    int iters_per_level = 66;
    double kappa0 = 0.05;
    double kappa_growth = 1.5;
    double kappa_max = 1.0;
    Regularizer regularizer = Regularizer::content_aware_lp;
    /// Umbrella step of the isotropic regularizer, one pass per iteration.
    double isotropic_tau = 0.1;
    /// Settings of the content-aware regularizer on the depth grid.
    DenoiseConfig lp = default_depth_lp();
    WindowParams window;
    /// Consecutive energy increases that halve eta.
    int guard_patience = 5;

    static DenoiseConfig default_depth_lp();
    void validate() const;
};

nlohmann::json to_json(const EvolveConfig& config);

struct EvolveIteration {
    int level = 0; // 0 is the finest level
    int iter = 0;
    double energy = 0.0;
    double eta = 0.0;
    double kappa = 0.0;
    double lambda = 0.0;
    double p = 0.0;
};

nlohmann::json to_json(const EvolveIteration& it);

struct EvolveResult {
    DepthMap depth;
    std::vector<EvolveIteration> trace;
    int eta_halvings = 0;
};

/// Coarse-to-fine gradient descent on the summed data energy over all
/// auxiliary views, each step followed by the selected regularizer. eta is
/// halved after guard_patience consecutive energy increases, and a step that
/// leaves the positive depth range is retried at half the size. Throws
/// NumericError when eta underflows 1e-12.
EvolveResult evolve(const ScalarImage& ref, const std::vector<ScalarImage>& aux,
                    const DepthMap& depth0, const std::vector<CameraPair>& cams,
                    const EvolveConfig& config);

EvolveResult evolve(const ScalarImage& ref, const ScalarImage& aux, const DepthMap& depth0,
                    const CameraPair& cams, const EvolveConfig& config);

/// Difference operator over the 4-neighbour grid graph of a w x h raster.
EdgeDifferentialOperator grid_operator(int width, int height);

/// Every other pixel in each direction.
DepthMap subsample_depth(const DepthMap& depth, int width, int height);
/// Bilinear upsampling to (width, height), pixel (x, y) reading (x/2, y/2).
DepthMap upsample_depth(const DepthMap& depth, int width, int height);

/// 8-byte magic "DCVDEPTH", uint32 width, uint32 height (little endian),
/// then float32 depths row-major. Errors are IoError.
void write_depth(const std::filesystem::path& path, const DepthMap& depth);
DepthMap read_depth(const std::filesystem::path& path);

/// {"cameras": [{fx, fy, cx, cy, R: [9 row-major], t: [3]}, ...]}; the first
/// camera is the reference. A bare array is accepted on input.
std::vector<Camera> read_cameras(const std::filesystem::path& path);
void write_cameras(const std::filesystem::path& path, const std::vector<Camera>& cameras);
nlohmann::json to_json(const Camera& camera);
Camera camera_from_json(const nlohmann::json& j);

} // namespace dcv
