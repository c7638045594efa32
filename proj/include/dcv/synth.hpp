#pragma once

#include "dcv/image.hpp"
#include "dcv/mesh.hpp"
#include "dcv/surface_evolve.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dcv {

enum class SyntheticKind { cube, prism, sphere, plane_pair, step_edge };

SyntheticKind parse_synthetic_kind(const std::string& name);
std::string to_string(SyntheticKind kind);

struct SyntheticSpec {
    SyntheticKind kind = SyntheticKind::cube;
    /// Mesh kinds: segments per geometric edge. Stereo kinds: image width and height.
    int resolution = 1;
    /// Mesh kinds: Gaussian vertex noise. Stereo kinds: unused.
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    /// Stereo kinds: disparity in pixels of the nearest plane.
    double disparity = 4.0;

    /// Throws std::invalid_argument for resolution < 4 on stereo kinds,
    /// resolution < 1 on meshes or negative sigma.
    void validate() const;
};

struct SyntheticMesh {
    TriangleMesh clean;
    TriangleMesh noisy;
    std::vector<int> crease_edges;
};

/// Axis-aligned unit cube centred at the origin, `segments` x `segments`
/// quads per side, each split into two triangles.
TriangleMesh make_cube(int segments);

/// Straight prism over an equilateral triangle (circumradius 0.5, length 1),
/// with sharp 60 and 90 degree creases.
TriangleMesh make_prism(int segments);

/// Cube grid projected onto the sphere of radius 0.5.
TriangleMesh make_sphere(int segments);

/// Mesh kinds only. Creases are the clean mesh's edges with > 30 degree
/// normal deviation; the noisy mesh uses add_gaussian_noise(spec.seed).
SyntheticMesh generate_synthetic_mesh(const SyntheticSpec& spec);

/// Band-limited value noise in [0, 1]: three octaves of hashed lattice
/// values blended with smoothstep weights. `scale` is the coarsest lattice
/// period in pixels.
double value_noise(double x, double y, std::uint64_t seed, double scale = 8.0);

struct StereoBundle {
    ScalarImage reference;
    ScalarImage auxiliary;
    DepthMap true_depth;
    CameraPair cameras;
};

/// Stereo kinds only. The auxiliary image is value noise sampled on its
/// pixel grid; the reference image is predict_image(auxiliary, true depth)
/// where that projects into the auxiliary frame and the continuous noise
/// function at the projected position elsewhere. plane_pair is one
/// fronto-parallel plane; step_edge has the right half 25% further away.
/// The baseline is horizontal and chosen so the nearest plane has
/// `spec.disparity` pixels of disparity.
StereoBundle generate_stereo(const SyntheticSpec& spec);

} // namespace dcv
