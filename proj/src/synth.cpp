#include "dcv/synth.hpp"

#include "dcv/rng.hpp"

#include <Eigen/Geometry>

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

namespace dcv {

namespace {

using Tri = std::array<Eigen::Vector3d, 3>;

// Merges coincident corners (positions equal to 1e-9) into shared vertices.
TriangleMesh weld(const std::vector<Tri>& tris)
{
    std::map<std::array<long long, 3>, int> index;
    std::vector<Eigen::Vector3d> points;
    std::vector<Face> faces;
    faces.reserve(tris.size());
    for (const Tri& t : tris) {
        Face f{};
        for (int k = 0; k < 3; ++k) {
            const std::array<long long, 3> key = {std::llround(t[k].x() * 1e9),
                                                  std::llround(t[k].y() * 1e9),
                                                  std::llround(t[k].z() * 1e9)};
            auto it = index.find(key);
            if (it == index.end()) {
                it = index.emplace(key, static_cast<int>(points.size())).first;
                points.push_back(t[k]);
            }
            f[static_cast<std::size_t>(k)] = it->second;
        }
        faces.push_back(f);
    }
    Field v(static_cast<Eigen::Index>(points.size()), 3);
    for (std::size_t i = 0; i < points.size(); ++i)
        v.row(static_cast<Eigen::Index>(i)) = points[i].transpose();
    return TriangleMesh(std::move(v), std::move(faces));
}

// Quad p00 + s*du + t*dv split into segments x segments pairs of triangles,
// wound counter-clockwise around du x dv.
void add_quad(std::vector<Tri>& tris, const Eigen::Vector3d& p00, const Eigen::Vector3d& du,
              const Eigen::Vector3d& dv, int segments)
{
    auto at = [&](int i, int j) {
        return Eigen::Vector3d(p00 + (static_cast<double>(i) / segments) * du +
                               (static_cast<double>(j) / segments) * dv);
    };
    for (int i = 0; i < segments; ++i) {
        for (int j = 0; j < segments; ++j) {
            tris.push_back({at(i, j), at(i + 1, j), at(i + 1, j + 1)});
            tris.push_back({at(i, j), at(i + 1, j + 1), at(i, j + 1)});
        }
    }
}

std::vector<Tri> cube_triangles(int segments)
{
    std::vector<Tri> tris;
    for (int axis = 0; axis < 3; ++axis) {
        for (int s = -1; s <= 1; s += 2) {
            Eigen::Vector3d n = Eigen::Vector3d::Zero();
            n[axis] = s;
            Eigen::Vector3d u = Eigen::Vector3d::Zero();
            u[(axis + 1) % 3] = 1.0;
            const Eigen::Vector3d v = n.cross(u);
            add_quad(tris, 0.5 * n - 0.5 * u - 0.5 * v, u, v, segments);
        }
    }
    return tris;
}

// Triangle a, b, c split into segments^2 triangles of the same winding.
void add_triangle(std::vector<Tri>& tris, const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                  const Eigen::Vector3d& c, int segments)
{
    auto at = [&](int i, int j) {
        return Eigen::Vector3d(a + (static_cast<double>(i) / segments) * (b - a) +
                               (static_cast<double>(j) / segments) * (c - a));
    };
    for (int i = 0; i < segments; ++i) {
        for (int j = 0; i + j < segments; ++j) {
            tris.push_back({at(i, j), at(i + 1, j), at(i, j + 1)});
            if (i + j + 1 < segments)
                tris.push_back({at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)});
        }
    }
}

double smoothstep(double t)
{
    return t * t * (3.0 - 2.0 * t);
}

double lattice(std::int64_t ix, std::int64_t iy, int octave, std::uint64_t seed)
{
    std::uint64_t key = hash64(seed ^ 0x5851F42D4C957F2DULL);
    key = hash64(key ^ static_cast<std::uint64_t>(ix));
    key = hash64(key ^ static_cast<std::uint64_t>(iy));
    key = hash64(key ^ static_cast<std::uint64_t>(octave));
    return static_cast<double>(key >> 11) * 0x1.0p-53;
}

} // namespace

SyntheticKind parse_synthetic_kind(const std::string& name)
{
    if (name == "cube")
        return SyntheticKind::cube;
    if (name == "prism")
        return SyntheticKind::prism;
    if (name == "sphere")
        return SyntheticKind::sphere;
    if (name == "plane_pair" || name == "plane-pair")
        return SyntheticKind::plane_pair;
    if (name == "step_edge" || name == "step-edge")
        return SyntheticKind::step_edge;
    throw std::invalid_argument("unknown synthetic kind: " + name);
}

std::string to_string(SyntheticKind kind)
{
    switch (kind) {
    case SyntheticKind::cube:
        return "cube";
    case SyntheticKind::prism:
        return "prism";
    case SyntheticKind::sphere:
        return "sphere";
    case SyntheticKind::plane_pair:
        return "plane_pair";
    case SyntheticKind::step_edge:
        return "step_edge";
    }
    return "cube";
}

static bool is_stereo(SyntheticKind k)
{
    return k == SyntheticKind::plane_pair || k == SyntheticKind::step_edge;
}

void SyntheticSpec::validate() const
{
    if (is_stereo(kind) && resolution < 4)
        throw std::invalid_argument("stereo resolution must be >= 4");
    if (!is_stereo(kind) && resolution < 1)
        throw std::invalid_argument("mesh resolution must be >= 1");
    if (!(noise_sigma >= 0.0))
        throw std::invalid_argument("noise sigma must be >= 0");
    if (!(disparity >= 0.0))
        throw std::invalid_argument("disparity must be >= 0");
}

TriangleMesh make_cube(int segments)
{
    if (segments < 1)
        throw std::invalid_argument("segments must be >= 1");
    return weld(cube_triangles(segments));
}

TriangleMesh make_prism(int segments)
{
    if (segments < 1)
        throw std::invalid_argument("segments must be >= 1");
    std::array<Eigen::Vector3d, 3> base;
    for (int k = 0; k < 3; ++k) {
        const double a = std::numbers::pi / 2.0 + 2.0 * std::numbers::pi * k / 3.0;
        base[static_cast<std::size_t>(k)] = Eigen::Vector3d(0.5 * std::cos(a), 0.5 * std::sin(a), -0.5);
    }
    const Eigen::Vector3d up(0.0, 0.0, 1.0);
    std::vector<Tri> tris;
    for (int k = 0; k < 3; ++k) {
        const Eigen::Vector3d& p = base[static_cast<std::size_t>(k)];
        const Eigen::Vector3d& q = base[static_cast<std::size_t>((k + 1) % 3)];
        add_quad(tris, p, q - p, up, segments);
    }
    add_triangle(tris, base[0], base[2], base[1], segments);
    add_triangle(tris, base[0] + up, base[1] + up, base[2] + up, segments);
    return weld(tris);
}

TriangleMesh make_sphere(int segments)
{
    if (segments < 1)
        throw std::invalid_argument("segments must be >= 1");
    std::vector<Tri> tris = cube_triangles(segments);
    TriangleMesh cube = weld(tris);
    Field v = cube.vertices();
    for (Eigen::Index i = 0; i < v.rows(); ++i)
        v.row(i) = 0.5 * v.row(i).normalized();
    return cube.with_vertices(std::move(v));
}

SyntheticMesh generate_synthetic_mesh(const SyntheticSpec& spec)
{
    spec.validate();
    SyntheticMesh out;
    switch (spec.kind) {
    case SyntheticKind::cube:
        out.clean = make_cube(spec.resolution);
        break;
    case SyntheticKind::prism:
        out.clean = make_prism(spec.resolution);
        break;
    case SyntheticKind::sphere:
        out.clean = make_sphere(spec.resolution);
        break;
    default:
        throw std::invalid_argument("generate_synthetic_mesh: not a mesh kind");
    }
    out.crease_edges = detect_crease_edges(out.clean, 30.0);
    out.noisy = add_gaussian_noise(out.clean, spec.noise_sigma, spec.seed);
    return out;
}

double value_noise(double x, double y, std::uint64_t seed, double scale)
{
    double total = 0.0;
    double norm = 0.0;
    double amp = 1.0;
    double period = scale;
    for (int octave = 0; octave < 3; ++octave) {
        const double fx = x / period;
        const double fy = y / period;
        const double x0 = std::floor(fx);
        const double y0 = std::floor(fy);
        const auto ix = static_cast<std::int64_t>(x0);
        const auto iy = static_cast<std::int64_t>(y0);
        const double sx = smoothstep(fx - x0);
        const double sy = smoothstep(fy - y0);
        const double top = (1.0 - sx) * lattice(ix, iy, octave, seed) + sx * lattice(ix + 1, iy, octave, seed);
        const double bottom =
            (1.0 - sx) * lattice(ix, iy + 1, octave, seed) + sx * lattice(ix + 1, iy + 1, octave, seed);
        total += amp * ((1.0 - sy) * top + sy * bottom);
        norm += amp;
        amp *= 0.5;
        period *= 0.5;
    }
    return total / norm;
}

StereoBundle generate_stereo(const SyntheticSpec& spec)
{
    spec.validate();
    if (!is_stereo(spec.kind))
        throw std::invalid_argument("generate_stereo: not a stereo kind");
    const int n = spec.resolution;
    const double near_depth = 10.0;
    const double far_depth = 12.5;

    Camera cam;
    cam.fx = cam.fy = static_cast<double>(n);
    cam.cx = cam.cy = 0.5 * (n - 1);
    Camera aux_cam = cam;
    // Horizontal baseline: u_aux = u_ref - fx * b / depth.
    const double baseline = spec.disparity * near_depth / cam.fx;
    aux_cam.t = Eigen::Vector3d(-baseline, 0.0, 0.0);

    StereoBundle b;
    b.cameras = CameraPair::from_cameras(cam, aux_cam);
    b.true_depth = DepthMap(n, n, near_depth);
    if (spec.kind == SyntheticKind::step_edge)
        for (int y = 0; y < n; ++y)
            for (int x = n / 2; x < n; ++x)
                b.true_depth.at(x, y) = far_depth;

    b.auxiliary = ScalarImage(n, n, 0.0);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            b.auxiliary(x, y) = value_noise(x, y, spec.seed);

    b.reference = predict_image(b.auxiliary, b.true_depth, b.cameras);
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            if (b.reference.valid(x, y))
                continue;
            const Warp w = warp_pixel(b.cameras, x, y, b.true_depth.at(x, y));
            b.reference(x, y) = value_noise(w.u, w.v, spec.seed);
            b.reference.set_valid(x, y, true);
        }
    }
    return b;
}

} // namespace dcv
