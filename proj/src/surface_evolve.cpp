#include "dcv/surface_evolve.hpp"

#include "dcv/errors.hpp"
#include "dcv/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dcv {

namespace {

// First step of the automatic step size moves the steepest pixel by this
// fraction of the mean depth.
constexpr double kAutoStep = 0.005;

constexpr char kDepthMagic[8] = {'D', 'C', 'V', 'D', 'E', 'P', 'T', 'H'};

void put_u32(std::ostream& out, std::uint32_t v)
{
    const std::array<char, 4> b = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                                   static_cast<char>((v >> 16) & 0xFF),
                                   static_cast<char>((v >> 24) & 0xFF)};
    out.write(b.data(), 4);
}

std::uint32_t get_u32(std::istream& in)
{
    std::array<unsigned char, 4> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 4))
        throw IoError("depth file: truncated header");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

ScalarImage depth_as_image(const DepthMap& d)
{
    return ScalarImage(d.width, d.height, d.depth);
}

struct Level {
    ScalarImage ref;
    std::vector<ScalarImage> aux;
    std::vector<CameraPair> cams;
};

double total_energy(const Level& lv, const DepthMap& depth, const WindowParams& window)
{
    double e = 0.0;
    for (std::size_t k = 0; k < lv.aux.size(); ++k)
        e += data_energy(lv.ref, lv.aux[k], depth, lv.cams[k], window);
    return e;
}

std::vector<double> total_gradient(const Level& lv, const DepthMap& depth, double kappa,
                                   const WindowParams& window)
{
    std::vector<double> g(depth.depth.size(), 0.0);
    for (std::size_t k = 0; k < lv.aux.size(); ++k) {
        const std::vector<double> gk = data_gradient(lv.ref, lv.aux[k], depth, lv.cams[k], kappa, window);
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] += gk[i];
    }
    return g;
}

struct RegularizeOutcome {
    double lambda = 0.0;
    double p = 0.0;
};

RegularizeOutcome regularize(DepthMap& depth, const EdgeDifferentialOperator& grid,
                             const EvolveConfig& config)
{
    if (config.regularizer == Regularizer::none)
        return {};
    Field x(depth.depth.size(), 1);
    for (std::size_t i = 0; i < depth.depth.size(); ++i)
        x(static_cast<Eigen::Index>(i), 0) = depth.depth[i];
    Field out;
    RegularizeOutcome r;
    if (config.regularizer == Regularizer::isotropic) {
        out = umbrella_smooth(grid, x, config.isotropic_tau, 1);
    } else {
        // A flat field is already its own Lp proximal point.
        const Field pilot = umbrella_smooth(grid, x, config.lp.pilot_tau, config.lp.pilot_iters);
        const Field dx = grid.apply(config.lp.fixed_params ? x : pilot);
        if (dx.cwiseAbs().maxCoeff() == 0.0 || (!config.lp.fixed_params && pilot == x))
            return {};
        const FieldDenoiseResult res = denoise_field(grid, x, config.lp);
        out = res.x;
        r.lambda = res.params.lambda();
        r.p = res.params.p;
    }
    for (std::size_t i = 0; i < depth.depth.size(); ++i)
        depth.depth[i] = out(static_cast<Eigen::Index>(i), 0);
    return r;
}

} // namespace

void Camera::validate() const
{
    if (!(fx > 0.0) || !(fy > 0.0))
        throw std::invalid_argument("camera focal lengths must be > 0");
    if (!R.allFinite() || !t.allFinite() || !std::isfinite(cx) || !std::isfinite(cy))
        throw std::invalid_argument("camera parameters must be finite");
    if ((R * R.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-10 ||
        std::abs(R.determinant() - 1.0) > 1e-10)
        throw std::invalid_argument("camera rotation is not orthonormal");
}

Camera Camera::scaled(double factor) const
{
    Camera c = *this;
    c.fx = fx / factor;
    c.fy = fy / factor;
    c.cx = cx / factor;
    c.cy = cy / factor;
    return c;
}

CameraPair CameraPair::from_cameras(const Camera& reference, const Camera& auxiliary)
{
    CameraPair p;
    p.reference = reference;
    p.auxiliary = auxiliary;
    p.R = auxiliary.R * reference.R.transpose();
    p.t = auxiliary.t - p.R * reference.t;
    return p;
}

void CameraPair::validate() const
{
    reference.validate();
    auxiliary.validate();
    Camera rel;
    rel.R = R;
    rel.t = t;
    rel.validate();
}

CameraPair CameraPair::scaled(double factor) const
{
    CameraPair p = *this;
    p.reference = reference.scaled(factor);
    p.auxiliary = auxiliary.scaled(factor);
    return p;
}

Warp warp_pixel(const CameraPair& cams, double u, double v, double depth)
{
    const Camera& k0 = cams.reference;
    const Camera& k1 = cams.auxiliary;
    const Eigen::Vector3d ray((u - k0.cx) / k0.fx, (v - k0.cy) / k0.fy, 1.0);
    const Eigen::Vector3d a = cams.R * ray;
    const Eigen::Vector3d x = depth * a + cams.t;
    Warp w;
    w.in_front = x.z() > 0.0;
    if (!w.in_front)
        return w;
    const double z2 = x.z() * x.z();
    w.u = k1.fx * x.x() / x.z() + k1.cx;
    w.v = k1.fy * x.y() / x.z() + k1.cy;
    w.du_dd = k1.fx * (a.x() * cams.t.z() - a.z() * cams.t.x()) / z2;
    w.dv_dd = k1.fy * (a.y() * cams.t.z() - a.z() * cams.t.y()) / z2;
    return w;
}

DepthMap::DepthMap(int w, int h, double fill)
    : width(w), height(h), depth(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill)
{
}

void DepthMap::validate() const
{
    if (width < 1 || height < 1 ||
        depth.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
        throw std::invalid_argument("depth map size mismatch");
    for (double d : depth)
        if (!(d > 0.0) || !std::isfinite(d))
            throw std::invalid_argument("depth values must be positive and finite");
}

ScalarImage predict_image(const ScalarImage& aux, const DepthMap& depth, const CameraPair& cams)
{
    ScalarImage out(depth.width, depth.height, 0.0);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < depth.height; ++y) {
        for (int x = 0; x < depth.width; ++x) {
            const Warp w = warp_pixel(cams, x, y, depth.at(x, y));
            BilinearSample s;
            if (w.in_front)
                s = sample_bilinear(aux, w.u, w.v);
            out(x, y) = s.inside ? s.value : 0.0;
            out.set_valid(x, y, s.inside);
        }
    }
    return out;
}

double data_energy(const ScalarImage& ref, const ScalarImage& aux, const DepthMap& depth,
                   const CameraPair& cams, const WindowParams& window)
{
    if (ref.width() != depth.width || ref.height() != depth.height)
        throw std::invalid_argument("data_energy: reference image and depth sizes differ");
    return dissimilarity_energy(ref, predict_image(aux, depth, cams), window);
}

std::vector<double> data_gradient(const ScalarImage& ref, const ScalarImage& aux,
                                  const DepthMap& depth, const CameraPair& cams, double kappa,
                                  const WindowParams& window)
{
    if (ref.width() != depth.width || ref.height() != depth.height)
        throw std::invalid_argument("data_gradient: reference image and depth sizes differ");
    const ScalarImage predicted = predict_image(aux, depth, cams);
    const WindowStats stats = window_stats(ref, predicted, window);
    const SimilarityDerivativeField f = detail_preserving_derivative(ref, predicted, stats, kappa, window);
    std::vector<double> g(depth.depth.size(), 0.0);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < depth.height; ++y) {
        for (int x = 0; x < depth.width; ++x) {
            if (!predicted.valid(x, y) || !ref.valid(x, y))
                continue;
            const Warp w = warp_pixel(cams, x, y, depth.at(x, y));
            const BilinearSample s = sample_bilinear(aux, w.u, w.v);
            g[predicted.index(x, y)] = f.d2m(x, y) * (s.dx * w.du_dd + s.dy * w.dv_dd);
        }
    }
    return g;
}

Regularizer parse_regularizer(const std::string& name)
{
    if (name == "content_aware_lp" || name == "lp")
        return Regularizer::content_aware_lp;
    if (name == "isotropic")
        return Regularizer::isotropic;
    if (name == "none")
        return Regularizer::none;
    throw std::invalid_argument("unknown regularizer: " + name);
}

std::string to_string(Regularizer r)
{
    switch (r) {
    case Regularizer::content_aware_lp:
        return "content_aware_lp";
    case Regularizer::isotropic:
        return "isotropic";
    case Regularizer::none:
        return "none";
    }
    return "none";
}

DenoiseConfig EvolveConfig::default_depth_lp()
{
    DenoiseConfig c;
    c.beta0 = 1.0;
    c.beta_max = 64.0;
    c.outer_iters = 1;
    c.inner_iters = 2;
    c.pilot_tau = 0.25;
    c.pilot_iters = 1;
    c.relax_iters = 0;
    return c;
}

void EvolveConfig::validate() const
{
    if (!(eta >= 0.0))
        throw std::invalid_argument("eta must be > 0 (or 0 for the default)");
    if (levels < 1 || iters_per_level < 1)
        throw std::invalid_argument("levels and iters_per_level must be >= 1");
    if (!(kappa0 >= 0.0) || !(kappa_growth >= 1.0) || !(kappa_max >= 0.0))
        throw std::invalid_argument("invalid kappa schedule");
    if (!(isotropic_tau > 0.0 && isotropic_tau <= 1.0))
        throw std::invalid_argument("isotropic_tau must lie in (0, 1]");
    if (guard_patience < 1)
        throw std::invalid_argument("guard_patience must be >= 1");
    lp.validate();
    window.validate();
}

nlohmann::json to_json(const EvolveConfig& c)
{
    return {{"eta", c.eta},
            {"levels", c.levels},
            {"iters_per_level", c.iters_per_level},
            {"kappa0", c.kappa0},
            {"kappa_growth", c.kappa_growth},
            {"kappa_max", c.kappa_max},
            {"regularizer", to_string(c.regularizer)},
            {"isotropic_tau", c.isotropic_tau},
            {"lp", to_json(c.lp)},
            {"window", {{"sigma_w", c.window.sigma_w}, {"radius", c.window.radius}, {"eps", c.window.eps}}},
            {"guard_patience", c.guard_patience}};
}

nlohmann::json to_json(const EvolveIteration& it)
{
    return {{"level", it.level}, {"iter", it.iter},   {"energy", it.energy}, {"eta", it.eta},
            {"kappa", it.kappa}, {"lambda", it.lambda}, {"p", it.p}};
}

EdgeDifferentialOperator grid_operator(int width, int height)
{
    std::vector<Edge> edges;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const int i = y * width + x;
            if (x + 1 < width)
                edges.push_back({i, i + 1});
            if (y + 1 < height)
                edges.push_back({i, i + width});
        }
    }
    std::sort(edges.begin(), edges.end());
    return EdgeDifferentialOperator(width * height, std::move(edges));
}

DepthMap subsample_depth(const DepthMap& depth, int width, int height)
{
    DepthMap out(width, height, 0.0);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            out.at(x, y) = depth.at(std::min(2 * x, depth.width - 1), std::min(2 * y, depth.height - 1));
    out.reference_view = depth.reference_view;
    return out;
}

DepthMap upsample_depth(const DepthMap& depth, int width, int height)
{
    const ScalarImage img = depth_as_image(depth);
    DepthMap out(width, height, 0.0);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double sx = std::min(0.5 * x, static_cast<double>(depth.width - 1));
            const double sy = std::min(0.5 * y, static_cast<double>(depth.height - 1));
            out.at(x, y) = sample_bilinear(img, sx, sy).value;
        }
    }
    out.reference_view = depth.reference_view;
    return out;
}

EvolveResult evolve(const ScalarImage& ref, const std::vector<ScalarImage>& aux,
                    const DepthMap& depth0, const std::vector<CameraPair>& cams,
                    const EvolveConfig& config)
{
    config.validate();
    depth0.validate();
    if (aux.empty() || aux.size() != cams.size())
        throw std::invalid_argument("evolve needs one camera pair per auxiliary image");
    if (ref.width() != depth0.width || ref.height() != depth0.height)
        throw std::invalid_argument("evolve: reference image and depth sizes differ");
    for (const CameraPair& c : cams)
        c.validate();

    // Finest level first.
    const std::vector<ScalarImage> ref_pyr = build_pyramid(ref, config.levels);
    std::vector<Level> levels(ref_pyr.size());
    for (std::size_t l = 0; l < ref_pyr.size(); ++l) {
        levels[l].ref = ref_pyr[l];
        levels[l].cams.reserve(cams.size());
        for (const CameraPair& c : cams)
            levels[l].cams.push_back(c.scaled(std::ldexp(1.0, static_cast<int>(l))));
    }
    for (const ScalarImage& a : aux) {
        const std::vector<ScalarImage> pyr = build_pyramid(a, static_cast<int>(ref_pyr.size()));
        for (std::size_t l = 0; l < ref_pyr.size(); ++l)
            levels[l].aux.push_back(pyr[l]);
    }

    std::vector<DepthMap> starts(ref_pyr.size());
    starts[0] = depth0;
    for (std::size_t l = 1; l < ref_pyr.size(); ++l)
        starts[l] = subsample_depth(starts[l - 1], ref_pyr[l].width(), ref_pyr[l].height());

    EvolveResult result;
    DepthMap depth = starts.back();
    double eta = config.eta;
    double kappa = config.kappa0;
    for (int l = static_cast<int>(levels.size()) - 1; l >= 0; --l) {
        const Level& lv = levels[static_cast<std::size_t>(l)];
        if (l != static_cast<int>(levels.size()) - 1)
            depth = upsample_depth(depth, lv.ref.width(), lv.ref.height());
        const EdgeDifferentialOperator grid = grid_operator(depth.width, depth.height);

        if (eta == 0.0) {
            const std::vector<double> g = total_gradient(lv, depth, kappa, config.window);
            double gmax = 0.0;
            for (double v : g)
                gmax = std::max(gmax, std::abs(v));
            double mean = 0.0;
            for (double v : depth.depth)
                mean += v;
            mean /= static_cast<double>(depth.depth.size());
            eta = gmax > 0.0 ? kAutoStep * mean / gmax : 1.0;
        }

        double energy = total_energy(lv, depth, config.window);
        int increases = 0;
        const auto halve = [&](int it, double e) {
            eta *= 0.5;
            ++result.eta_halvings;
            if (eta < 1e-12) {
                std::ostringstream msg;
                msg << "evolve: step size underflow at level " << l << ", iteration " << it
                    << ", energy " << e;
                throw NumericError(msg.str());
            }
        };
        for (int it = 0; it < config.iters_per_level; ++it) {
            const std::vector<double> g = total_gradient(lv, depth, kappa, config.window);
            DepthMap next = depth;
            RegularizeOutcome reg;
            // A step that leaves the positive range is rejected and retried
            // with half the step size.
            for (;;) {
                for (std::size_t i = 0; i < g.size(); ++i)
                    next.depth[i] = depth.depth[i] - eta * g[i];
                reg = regularize(next, grid, config);
                if (std::all_of(next.depth.begin(), next.depth.end(),
                                [](double v) { return v > 0.0 && std::isfinite(v); }))
                    break;
                halve(it, energy);
            }
            const double e = total_energy(lv, next, config.window);
            increases = e > energy ? increases + 1 : 0;
            depth = std::move(next);
            energy = e;
            result.trace.push_back({l, it, e, eta, kappa, reg.lambda, reg.p});
            if (increases >= config.guard_patience) {
                halve(it, e);
                increases = 0;
            }
        }
        kappa = std::min(kappa * config.kappa_growth, config.kappa_max);
    }
    result.depth = std::move(depth);
    return result;
}

EvolveResult evolve(const ScalarImage& ref, const ScalarImage& aux, const DepthMap& depth0,
                    const CameraPair& cams, const EvolveConfig& config)
{
    return evolve(ref, std::vector<ScalarImage>{aux}, depth0, std::vector<CameraPair>{cams}, config);
}

void write_depth(const std::filesystem::path& path, const DepthMap& depth)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open " + path.string() + " for writing");
    out.write(kDepthMagic, sizeof kDepthMagic);
    put_u32(out, static_cast<std::uint32_t>(depth.width));
    put_u32(out, static_cast<std::uint32_t>(depth.height));
    for (double d : depth.depth) {
        const float f = static_cast<float>(d);
        std::uint32_t bits = 0;
        std::memcpy(&bits, &f, 4);
        put_u32(out, bits);
    }
    if (!out)
        throw IoError("write failed: " + path.string());
}

DepthMap read_depth(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kDepthMagic, 8) != 0)
        throw IoError(path.string() + ": not a depth file");
    const std::uint32_t w = get_u32(in);
    const std::uint32_t h = get_u32(in);
    if (w == 0 || h == 0 || static_cast<std::uint64_t>(w) * h > (1ULL << 28))
        throw IoError(path.string() + ": bad depth dimensions");
    DepthMap d(static_cast<int>(w), static_cast<int>(h), 0.0);
    for (double& v : d.depth) {
        const std::uint32_t bits = get_u32(in);
        float f = 0.0f;
        std::memcpy(&f, &bits, 4);
        v = f;
    }
    return d;
}

nlohmann::json to_json(const Camera& c)
{
    nlohmann::json r = nlohmann::json::array();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            r.push_back(c.R(i, j));
    return {{"fx", c.fx}, {"fy", c.fy}, {"cx", c.cx}, {"cy", c.cy},
            {"R", r},     {"t", {c.t.x(), c.t.y(), c.t.z()}}};
}

Camera camera_from_json(const nlohmann::json& j)
{
    Camera c;
    try {
        c.fx = j.at("fx").get<double>();
        c.fy = j.at("fy").get<double>();
        c.cx = j.at("cx").get<double>();
        c.cy = j.at("cy").get<double>();
        if (j.contains("R")) {
            const auto& r = j.at("R");
            if (r.size() != 9)
                throw IoError("camera R needs 9 entries");
            for (int i = 0; i < 9; ++i)
                c.R(i / 3, i % 3) = r.at(static_cast<std::size_t>(i)).get<double>();
        }
        if (j.contains("t")) {
            const auto& t = j.at("t");
            if (t.size() != 3)
                throw IoError("camera t needs 3 entries");
            for (int i = 0; i < 3; ++i)
                c.t[i] = t.at(static_cast<std::size_t>(i)).get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("camera JSON: ") + e.what());
    }
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw IoError(std::string("camera JSON: ") + e.what());
    }
    return c;
}

std::vector<Camera> read_cameras(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    const nlohmann::json& list = j.is_array() ? j : j.value("cameras", nlohmann::json::array());
    if (!list.is_array() || list.empty())
        throw IoError(path.string() + ": no cameras");
    std::vector<Camera> cams;
    for (const auto& c : list)
        cams.push_back(camera_from_json(c));
    return cams;
}

void write_cameras(const std::filesystem::path& path, const std::vector<Camera>& cameras)
{
    nlohmann::json list = nlohmann::json::array();
    for (const Camera& c : cameras)
        list.push_back(to_json(c));
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open " + path.string() + " for writing");
    out << nlohmann::json{{"cameras", list}}.dump(2) << '\n';
}

} // namespace dcv
