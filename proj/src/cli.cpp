#include "dcv/cli.hpp"

#include "dcv/errors.hpp"
#include "dcv/image.hpp"
#include "dcv/lp_denoise.hpp"
#include "dcv/mesh.hpp"
#include "dcv/mesh_io.hpp"
#include "dcv/parallel.hpp"
#include "dcv/prior_fit.hpp"
#include "dcv/rng.hpp"
#include "dcv/similarity.hpp"
#include "dcv/surface_evolve.hpp"
#include "dcv/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace dcv::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Common {
    std::string report;
    std::string trace;
};

void add_common(CLI::App* app, Common& c)
{
    app->add_option("--report", c.report, "JSON summary report path");
    app->add_option("--trace", c.trace, "JSON-lines iteration trace path");
}

void write_json(const std::string& path, const json& j)
{
    if (path.empty()) {
        std::cout << j.dump(2) << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
}

void write_lines(const std::string& path, const std::vector<json>& lines)
{
    if (path.empty())
        return;
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    for (const json& j : lines)
        out << j.dump() << '\n';
}

bool is_raw(const fs::path& p)
{
    return p.extension() == ".f64";
}

ScalarImage load_image(const std::string& path)
{
    return is_raw(path) ? read_raw_f64(path) : read_image(path);
}

// Raw dumps keep full precision; PGM output is rescaled to [0, 1] when the
// values fall outside it.
void save_image(const std::string& path, const ScalarImage& img)
{
    if (is_raw(path)) {
        write_raw_f64(path, img);
        return;
    }
    double lo = 0.0, hi = 1.0;
    if (img.size() > 0) {
        const auto [mn, mx] = std::minmax_element(img.data().begin(), img.data().end());
        lo = *mn;
        hi = *mx;
    }
    if (lo >= 0.0 && hi <= 1.0) {
        write_pgm(path, img, 16);
        return;
    }
    ScalarImage scaled = img;
    const double span = hi > lo ? hi - lo : 1.0;
    for (double& v : scaled.data())
        v = (v - lo) / span;
    write_pgm(path, scaled, 16);
}

json window_json(const WindowParams& w)
{
    return {{"sigma_w", w.sigma_w}, {"radius", w.radius}, {"eps", w.eps}};
}

ScalarImage random_texture(int size, std::uint64_t seed)
{
    ScalarImage img(size, size, 0.0);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            img(x, y) = value_noise(x, y, seed, 4.0);
    return img;
}

void add_window_options(CLI::App* app, WindowParams& w)
{
    app->add_option("--sigma-w", w.sigma_w, "Gaussian window scale")->check(CLI::PositiveNumber);
    app->add_option("--radius", w.radius, "window radius in pixels")->check(CLI::NonNegativeNumber);
    app->add_option("--eps", w.eps, "variance regularizer")->check(CLI::NonNegativeNumber);
}

json base_report(const std::string& command)
{
    return {{"command", command}, {"threads", thread_count()}};
}

// ----------------------------------------------------------------------------

struct DenoiseArgs {
    Common common;
    std::string in, out, reference;
    DenoiseConfig config;
    std::optional<double> p, theta, sigma;
    bool freeze_p = false;
};

int cmd_denoise(DenoiseArgs& a)
{
    if (a.p || a.theta || a.sigma) {
        if (!(a.p && a.theta && a.sigma))
            throw std::invalid_argument("--p, --theta and --sigma must be given together");
        a.config.fixed_params = HyperLaplacianParams{*a.p, *a.theta, *a.sigma};
    }
    a.config.refit_p_each_outer = !a.freeze_p;
    const TriangleMesh noisy = read_mesh(a.in);
    const auto t0 = std::chrono::steady_clock::now();
    const DenoiseResult r = denoise(noisy, a.config);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_mesh(a.out, r.mesh);

    json report = base_report("denoise");
    report["config"] = {{"in", a.in}, {"out", a.out}, {"reference", a.reference}, {"denoise", to_json(a.config)}};
    report["params"] = {{"p", r.params.p},
                        {"theta", r.params.theta},
                        {"sigma", r.params.sigma},
                        {"lambda", r.params.lambda()}};
    json metrics = {{"vertices", r.mesh.num_vertices()},
                    {"faces", r.mesh.num_faces()},
                    {"iterations", r.trace.size()},
                    {"rmse_vs_input", std::sqrt((r.mesh.vertices() - noisy.vertices()).squaredNorm() /
                                                noisy.num_vertices())},
                    {"final_objective", r.trace.empty() ? 0.0 : r.trace.back().objective},
                    {"seconds", seconds}};
    if (!a.reference.empty()) {
        const TriangleMesh ref = read_mesh(a.reference);
        const std::vector<int> creases = detect_crease_edges(ref);
        const MeshQualityReport before = quality_report(noisy, ref, creases);
        const MeshQualityReport after = quality_report(r.mesh, ref, creases);
        metrics["input_rmse"] = before.vertex_rmse;
        metrics["output_rmse"] = after.vertex_rmse;
        metrics["input_crease_error_deg"] = before.mean_dihedral_error_deg;
        metrics["output_crease_error_deg"] = after.mean_dihedral_error_deg;
        metrics["output_max_deviation"] = after.max_deviation;
    }
    report["metrics"] = metrics;
    std::vector<json> lines;
    for (const DenoiseIteration& it : r.trace)
        lines.push_back(to_json(it));
    write_lines(a.common.trace, lines);
    write_json(a.common.report, report);
    return kExitOk;
}

struct FitArgs {
    Common common;
    std::string in, noisy, samples, op = "area";
};

int cmd_fit_prior(FitArgs& a)
{
    std::vector<double> values;
    int m = 0;
    int components = 1;
    double sigma = 0.0;
    if (!a.samples.empty()) {
        std::ifstream in(a.samples);
        if (!in)
            throw IoError("cannot open " + a.samples);
        double v = 0.0;
        while (in >> v) {
            if (!(v >= 0.0) || !std::isfinite(v))
                throw IoError(a.samples + ": samples must be finite and >= 0");
            values.push_back(std::abs(v));
        }
        if (!in.eof())
            throw IoError(a.samples + ": malformed number");
        if (values.empty())
            throw IoError(a.samples + ": no samples");
        m = static_cast<int>(values.size());
    } else {
        if (a.in.empty())
            throw std::invalid_argument("fit-prior needs --in or --samples");
        const TriangleMesh mesh = read_mesh(a.in);
        const EdgeDifferentialOperator d =
            a.op == "difference" ? build_edge_operator(mesh) : build_area_edge_operator(mesh);
        values = gradient_samples(d.apply(mesh.vertices()));
        m = d.rows();
        components = 3;
        if (!a.noisy.empty()) {
            const TriangleMesh noisy = read_mesh(a.noisy);
            if (!noisy.same_connectivity(mesh))
                throw std::invalid_argument("--noisy must share the mesh's connectivity");
            sigma = estimate_sigma(mesh.vertices(), noisy.vertices());
        }
    }
    const PriorFit fit = fit_p(values, m, components);
    json report = base_report("fit-prior");
    report["config"] = {{"in", a.in}, {"noisy", a.noisy}, {"samples", a.samples}, {"operator", a.op},
                        {"m", m}, {"components", components}};
    report["fit"] = to_json(fit, sigma);
    write_json(a.common.report, report);
    return kExitOk;
}

struct GstArgs {
    Common common;
    int cases = 1000;
    std::uint64_t seed = 1;
    double step = 1e-6;
};

int cmd_gst_check(GstArgs& a)
{
    SplitMix64 rng(a.seed);
    const double ps[4] = {0.2, 0.5, 0.75, 1.0};
    double worst = 0.0;
    json worst_case = nullptr;
    std::vector<json> lines;
    for (int k = 0; k < a.cases; ++k) {
        const double d = rng.uniform(0.0, 10.0);
        const double tau = rng.uniform(0.0, 5.0);
        const double p = ps[rng.next() % 4];
        const double x = gst_shrink(d, tau, p);
        const double oracle = reference::gst_grid_minimize(d, tau, p, a.step);
        const double err = std::abs(x - oracle);
        lines.push_back({{"case", k}, {"d", d}, {"tau", tau}, {"p", p}, {"gst", x}, {"grid", oracle}, {"abs_error", err}});
        if (err > worst || worst_case.is_null()) {
            worst = std::max(worst, err);
            worst_case = lines.back();
        }
    }
    json report = base_report("gst-check");
    report["config"] = {{"cases", a.cases}, {"seed", a.seed}, {"step", a.step}};
    report["max_abs_error"] = worst;
    report["worst_case"] = worst_case;
    report["pass"] = worst <= 1e-4;
    write_lines(a.common.trace, lines);
    write_json(a.common.report, report);
    return kExitOk;
}

struct ImagePairArgs {
    Common common;
    std::string i1, i2, out;
    WindowParams window;
    double kappa = 0.0;
};

int cmd_zncc_grad(ImagePairArgs& a)
{
    const ScalarImage i1 = load_image(a.i1);
    const ScalarImage i2 = load_image(a.i2);
    const WindowStats stats = window_stats(i1, i2, a.window);
    const SimilarityDerivativeField f = detail_preserving_derivative(i1, i2, stats, a.kappa, a.window);
    if (!a.out.empty())
        save_image(a.out, f.d2m);
    const ScalarImage m = zncc(stats);
    double mean_m = 0.0;
    int active = 0;
    for (std::size_t i = 0; i < m.size(); ++i)
        if (stats.active[i] != 0) {
            mean_m += m.data()[i];
            ++active;
        }
    double max_abs = 0.0;
    for (double v : f.d2m.data())
        max_abs = std::max(max_abs, std::abs(v));
    json report = base_report("zncc-grad");
    report["config"] = {{"i1", a.i1}, {"i2", a.i2}, {"out", a.out}, {"kappa", a.kappa}, {"window", window_json(a.window)}};
    report["metrics"] = {{"energy", dissimilarity_energy(i1, i2, a.window)},
                         {"mean_zncc", active > 0 ? mean_m / active : 0.0},
                         {"active_pixels", active},
                         {"max_abs_d2m", max_abs}};
    write_json(a.common.report, report);
    return kExitOk;
}

int cmd_guided_filter(ImagePairArgs& a)
{
    const ScalarImage input = load_image(a.i1);
    const ScalarImage guide = load_image(a.i2);
    const ScalarImage q = guided_filter(input, guide, a.window);
    save_image(a.out, q);
    json report = base_report("guided-filter");
    report["config"] = {{"input", a.i1}, {"guide", a.i2}, {"out", a.out}, {"window", window_json(a.window)}};
    double max_change = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i)
        if (q.mask()[i] != 0)
            max_change = std::max(max_change, std::abs(q.data()[i] - input.data()[i]));
    report["metrics"] = {{"max_abs_change", max_change}};
    write_json(a.common.report, report);
    return kExitOk;
}

struct BridgeArgs {
    Common common;
    std::string i1, i2;
    int size = 32;
    int pairs = 5;
    std::uint64_t seed = 1;
    WindowParams window;
};

int cmd_bridge_check(BridgeArgs& a)
{
    std::vector<std::pair<ScalarImage, ScalarImage>> inputs;
    if (!a.i1.empty() || !a.i2.empty()) {
        if (a.i1.empty() || a.i2.empty())
            throw std::invalid_argument("bridge-check needs both --i1 and --i2");
        inputs.emplace_back(load_image(a.i1), load_image(a.i2));
    } else {
        for (int k = 0; k < a.pairs; ++k) {
            const std::uint64_t s = hash64(a.seed + static_cast<std::uint64_t>(k));
            inputs.emplace_back(random_texture(a.size, s), random_texture(a.size, hash64(s)));
        }
    }
    double exact = 0.0, approx_rel = 0.0;
    std::vector<json> lines;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        const BridgeResidual r = bridge_identity_residual(inputs[k].first, inputs[k].second, a.window);
        const double rel = r.range > 0.0 ? r.approximate / r.range : 0.0;
        exact = std::max(exact, r.exact);
        approx_rel = std::max(approx_rel, rel);
        lines.push_back({{"pair", k}, {"exact", r.exact}, {"approximate", r.approximate},
                         {"range", r.range}, {"pixels", r.pixels}});
    }
    json report = base_report("bridge-check");
    report["config"] = {{"i1", a.i1}, {"i2", a.i2}, {"size", a.size}, {"pairs", a.pairs},
                        {"seed", a.seed}, {"window", window_json(a.window)}};
    report["max_exact_residual"] = exact;
    report["max_approximate_relative"] = approx_rel;
    report["pass"] = exact <= 1e-10;
    write_lines(a.common.trace, lines);
    write_json(a.common.report, report);
    return kExitOk;
}

struct EvolveArgs {
    Common common;
    std::string ref, cameras, depth0, out, truth;
    std::vector<std::string> aux;
    std::string regularizer = "content_aware_lp";
    EvolveConfig config;
};

int cmd_evolve(EvolveArgs& a)
{
    a.config.regularizer = parse_regularizer(a.regularizer);
    const ScalarImage ref = load_image(a.ref);
    std::vector<ScalarImage> aux;
    for (const std::string& p : a.aux)
        aux.push_back(load_image(p));
    const std::vector<Camera> cams = read_cameras(a.cameras);
    if (cams.size() != aux.size() + 1)
        throw std::invalid_argument("camera file must list the reference and one camera per --aux image");
    std::vector<CameraPair> pairs;
    for (std::size_t k = 1; k < cams.size(); ++k)
        pairs.push_back(CameraPair::from_cameras(cams[0], cams[k]));
    const DepthMap depth0 = read_depth(a.depth0);
    try {
        depth0.validate();
    } catch (const std::invalid_argument& e) {
        throw IoError(a.depth0 + ": " + e.what());
    }

    const auto t0 = std::chrono::steady_clock::now();
    const EvolveResult r = evolve(ref, aux, depth0, pairs, a.config);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_depth(a.out, r.depth);

    json report = base_report("evolve");
    report["config"] = {{"ref", a.ref}, {"aux", a.aux}, {"cameras", a.cameras}, {"depth0", a.depth0},
                        {"out", a.out}, {"truth", a.truth}, {"evolve", to_json(a.config)}};
    json metrics = {{"iterations", r.trace.size()},
                    {"eta_halvings", r.eta_halvings},
                    {"final_energy", r.trace.empty() ? 0.0 : r.trace.back().energy},
                    {"seconds", seconds}};
    if (!a.truth.empty()) {
        const DepthMap truth = read_depth(a.truth);
        if (truth.width != r.depth.width || truth.height != r.depth.height)
            throw std::invalid_argument("--truth has a different size");
        double se = 0.0, mean = 0.0;
        for (std::size_t i = 0; i < truth.depth.size(); ++i) {
            se += (r.depth.depth[i] - truth.depth[i]) * (r.depth.depth[i] - truth.depth[i]);
            mean += truth.depth[i];
        }
        const double n = static_cast<double>(truth.depth.size());
        metrics["depth_rmse"] = std::sqrt(se / n);
        metrics["depth_rmse_relative"] = std::sqrt(se / n) / (mean / n);
    }
    report["metrics"] = metrics;
    std::vector<json> lines;
    for (const EvolveIteration& it : r.trace)
        lines.push_back(to_json(it));
    write_lines(a.common.trace, lines);
    write_json(a.common.report, report);
    return kExitOk;
}

struct SynthArgs {
    Common common;
    std::string kind = "cube";
    std::string out;
    SyntheticSpec spec;
    double init_offset = 0.1;
};

int cmd_synth(SynthArgs& a)
{
    a.spec.kind = parse_synthetic_kind(a.kind);
    json report = base_report("synth");
    report["config"] = {{"kind", to_string(a.spec.kind)}, {"resolution", a.spec.resolution},
                        {"noise", a.spec.noise_sigma}, {"seed", a.spec.seed},
                        {"disparity", a.spec.disparity}, {"init_offset", a.init_offset}, {"out", a.out}};
    if (a.spec.kind == SyntheticKind::plane_pair || a.spec.kind == SyntheticKind::step_edge) {
        const StereoBundle b = generate_stereo(a.spec);
        const fs::path dir(a.out);
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec)
            throw IoError("cannot create " + a.out + ": " + ec.message());
        write_raw_f64(dir / "reference.f64", b.reference);
        write_raw_f64(dir / "auxiliary.f64", b.auxiliary);
        write_pgm(dir / "reference.pgm", b.reference, 16);
        write_pgm(dir / "auxiliary.pgm", b.auxiliary, 16);
        write_depth(dir / "depth_true.dcvd", b.true_depth);
        DepthMap init = b.true_depth;
        for (double& d : init.depth)
            d *= 1.0 + a.init_offset;
        write_depth(dir / "depth_init.dcvd", init);
        write_cameras(dir / "cameras.json", {b.cameras.reference, [&] {
                                                 Camera c = b.cameras.auxiliary;
                                                 c.R = b.cameras.R;
                                                 c.t = b.cameras.t;
                                                 return c;
                                             }()});
        report["outputs"] = {"reference.f64", "auxiliary.f64", "reference.pgm", "auxiliary.pgm",
                             "depth_true.dcvd", "depth_init.dcvd", "cameras.json"};
    } else {
        const SyntheticMesh m = generate_synthetic_mesh(a.spec);
        const fs::path out(a.out);
        write_mesh(out, m.noisy);
        fs::path clean = out;
        clean.replace_filename(out.stem().string() + "_clean" + out.extension().string());
        write_mesh(clean, m.clean);
        report["outputs"] = {out.filename().string(), clean.filename().string()};
        report["mesh"] = {{"vertices", m.clean.num_vertices()},
                          {"faces", m.clean.num_faces()},
                          {"edges", m.clean.num_edges()}};
        report["crease_edges"] = m.crease_edges;
    }
    write_json(a.common.report, report);
    return kExitOk;
}

void error_line(const char* kind, const std::string& message)
{
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

} // namespace

int run(const std::vector<std::string>& args)
{
    CLI::App app{"Detail-preserving similarity, content-aware Lp mesh denoising and depth evolution"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "dcv 1.0");

    DenoiseArgs den;
    auto* c_den = app.add_subcommand("denoise", "Content-aware Lp mesh denoising");
    c_den->add_option("--in", den.in, "noisy mesh (.obj or .ply)")->required();
    c_den->add_option("--out", den.out, "denoised mesh")->required();
    c_den->add_option("--reference", den.reference, "clean mesh for quality metrics");
    c_den->add_option("--beta0", den.config.beta0, "initial splitting penalty");
    c_den->add_option("--beta-growth", den.config.beta_growth, "penalty multiplier");
    c_den->add_option("--beta-max", den.config.beta_max, "largest penalty");
    c_den->add_option("--outer", den.config.outer_iters, "joint fit/solve iterations");
    c_den->add_option("--inner", den.config.inner_iters, "splitting sweeps per penalty");
    c_den->add_option("--pilot-tau", den.config.pilot_tau, "umbrella step of the pilot estimate");
    c_den->add_option("--pilot-iters", den.config.pilot_iters, "umbrella passes of the pilot estimate");
    c_den->add_option("--relax-iters", den.config.relax_iters, "tangential relaxation passes");
    c_den->add_option("--relax-tau", den.config.relax_tau, "tangential relaxation step");
    c_den->add_option("--crease-angle", den.config.crease_angle_deg, "crease threshold in degrees");
    c_den->add_option("--p", den.p, "fixed shape p (with --theta and --sigma)");
    c_den->add_option("--theta", den.theta, "fixed width theta");
    c_den->add_option("--sigma", den.sigma, "fixed noise level sigma");
    c_den->add_flag("--freeze-p", den.freeze_p, "fit p once, refit only sigma and theta");
    add_common(c_den, den.common);

    FitArgs fit;
    auto* c_fit = app.add_subcommand("fit-prior", "Fit the hyper-Laplacian prior");
    c_fit->add_option("--in", fit.in, "mesh whose edge gradients are fitted");
    c_fit->add_option("--noisy", fit.noisy, "noisy observation, for sigma");
    c_fit->add_option("--samples", fit.samples, "text file of nonnegative samples instead of a mesh");
    c_fit->add_option("--operator", fit.op, "area or difference")
        ->check(CLI::IsMember({"area", "difference"}));
    add_common(c_fit, fit.common);

    GstArgs gst;
    auto* c_gst = app.add_subcommand("gst-check", "Compare GST shrinkage with grid minimization");
    c_gst->add_option("--cases", gst.cases, "random cases")->check(CLI::PositiveNumber);
    c_gst->add_option("--seed", gst.seed, "random seed");
    c_gst->add_option("--step", gst.step, "fine grid step")->check(CLI::PositiveNumber);
    add_common(c_gst, gst.common);

    ImagePairArgs zg;
    auto* c_zg = app.add_subcommand("zncc-grad", "ZNCC derivative with respect to the second image");
    c_zg->add_option("--i1", zg.i1, "first image (.pgm, .ppm or .f64)")->required();
    c_zg->add_option("--i2", zg.i2, "second image")->required();
    c_zg->add_option("--out", zg.out, "derivative image (.f64 keeps full precision)");
    c_zg->add_option("--kappa", zg.kappa, "variance constraint weight")->check(CLI::NonNegativeNumber);
    add_window_options(c_zg, zg.window);
    add_common(c_zg, zg.common);

    ImagePairArgs gf;
    auto* c_gf = app.add_subcommand("guided-filter", "Guided image filter");
    c_gf->add_option("--in", gf.i1, "input image")->required();
    c_gf->add_option("--guide", gf.i2, "guidance image")->required();
    c_gf->add_option("--out", gf.out, "filtered image")->required();
    add_window_options(c_gf, gf.window);
    add_common(c_gf, gf.common);

    BridgeArgs br;
    auto* c_br = app.add_subcommand("bridge-check", "Check the ZNCC / guided filter identity");
    c_br->add_option("--i1", br.i1, "first image (random textures when omitted)");
    c_br->add_option("--i2", br.i2, "second image");
    c_br->add_option("--size", br.size, "random texture size")->check(CLI::Range(8, 4096));
    c_br->add_option("--pairs", br.pairs, "random pairs")->check(CLI::PositiveNumber);
    c_br->add_option("--seed", br.seed, "random seed");
    add_window_options(c_br, br.window);
    add_common(c_br, br.common);

    EvolveArgs ev;
    auto* c_ev = app.add_subcommand("evolve", "Depth-map surface evolution");
    c_ev->add_option("--ref", ev.ref, "reference image")->required();
    c_ev->add_option("--aux", ev.aux, "auxiliary image(s)")->required();
    c_ev->add_option("--cameras", ev.cameras, "camera JSON, reference first")->required();
    c_ev->add_option("--depth0", ev.depth0, "initial depth map")->required();
    c_ev->add_option("--out", ev.out, "recovered depth map")->required();
    c_ev->add_option("--truth", ev.truth, "true depth for metrics");
    c_ev->add_option("--eta", ev.config.eta, "gradient step (0 = automatic)")->check(CLI::NonNegativeNumber);
    c_ev->add_option("--levels", ev.config.levels, "pyramid levels")->check(CLI::PositiveNumber);
    c_ev->add_option("--iters", ev.config.iters_per_level, "iterations per level")->check(CLI::PositiveNumber);
    c_ev->add_option("--kappa", ev.config.kappa0, "initial variance constraint weight");
    c_ev->add_option("--kappa-growth", ev.config.kappa_growth, "kappa multiplier per level");
    c_ev->add_option("--regularizer", ev.regularizer, "content_aware_lp, isotropic or none")
        ->check(CLI::IsMember({"content_aware_lp", "lp", "isotropic", "none"}));
    c_ev->add_option("--isotropic-tau", ev.config.isotropic_tau, "umbrella step of the isotropic regularizer");
    c_ev->add_option("--beta0", ev.config.lp.beta0, "initial splitting penalty of the depth regularizer");
    add_window_options(c_ev, ev.config.window);
    add_common(c_ev, ev.common);

    SynthArgs sy;
    auto* c_sy = app.add_subcommand("synth", "Generate synthetic meshes and stereo scenes");
    c_sy->add_option("--kind", sy.kind, "cube, prism, sphere, plane_pair or step_edge")
        ->check(CLI::IsMember({"cube", "prism", "sphere", "plane_pair", "plane-pair", "step_edge", "step-edge"}));
    c_sy->add_option("--resolution", sy.spec.resolution, "segments per edge, or image size");
    c_sy->add_option("--noise", sy.spec.noise_sigma, "vertex noise sigma");
    c_sy->add_option("--seed", sy.spec.seed, "random seed");
    c_sy->add_option("--disparity", sy.spec.disparity, "disparity of the nearest plane in pixels");
    c_sy->add_option("--init-offset", sy.init_offset, "relative offset of the written initial depth");
    c_sy->add_option("--out", sy.out, "mesh path, or directory for stereo kinds")->required();
    add_common(c_sy, sy.common);

    std::vector<char*> argv;
    std::vector<std::string> storage = args;
    if (storage.empty())
        storage.emplace_back("dcv");
    for (std::string& s : storage)
        argv.push_back(s.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (const auto env = threads_from_env())
            set_thread_count(*env);
        if (c_den->parsed())
            return cmd_denoise(den);
        if (c_fit->parsed())
            return cmd_fit_prior(fit);
        if (c_gst->parsed())
            return cmd_gst_check(gst);
        if (c_zg->parsed())
            return cmd_zncc_grad(zg);
        if (c_gf->parsed())
            return cmd_guided_filter(gf);
        if (c_br->parsed())
            return cmd_bridge_check(br);
        if (c_ev->parsed())
            return cmd_evolve(ev);
        if (c_sy->parsed())
            return cmd_synth(sy);
    } catch (const IoError& e) {
        error_line("io", e.what());
        return kExitIo;
    } catch (const NumericError& e) {
        error_line("numeric", e.what());
        return kExitNumeric;
    } catch (const std::invalid_argument& e) {
        error_line("usage", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        error_line("internal", e.what());
        return kExitUsage;
    }
    return kExitUsage;
}

int run(int argc, char** argv)
{
    return run(std::vector<std::string>(argv, argv + argc));
}

} // namespace dcv::cli
