// OpenMP kernels next to their serial references.

#include "dcv/image.hpp"
#include "dcv/lp_denoise.hpp"
#include "dcv/mesh.hpp"
#include "dcv/rng.hpp"
#include "dcv/similarity.hpp"
#include "dcv/surface_evolve.hpp"
#include "dcv/synth.hpp"

#include <benchmark/benchmark.h>

using namespace dcv;

namespace {

ScalarImage texture(int n)
{
    SplitMix64 rng(1);
    ScalarImage img(n, n, 0.0);
    for (double& v : img.data())
        v = rng.uniform();
    return img;
}

Field random_field(Eigen::Index rows, std::uint64_t seed)
{
    SplitMix64 rng(seed);
    Field f(rows, 3);
    for (Eigen::Index i = 0; i < f.size(); ++i)
        f.data()[i] = rng.normal();
    return f;
}

void BM_masked_convolve(benchmark::State& state)
{
    const ScalarImage img = texture(static_cast<int>(state.range(0)));
    const GaussianKernel k;
    for (auto _ : state)
        benchmark::DoNotOptimize(masked_convolve(img.data(), img.mask(), img.width(), img.height(), k));
}

void BM_masked_convolve_reference(benchmark::State& state)
{
    const ScalarImage img = texture(static_cast<int>(state.range(0)));
    const GaussianKernel k;
    for (auto _ : state)
        benchmark::DoNotOptimize(
            reference::masked_convolve(img.data(), img.mask(), img.width(), img.height(), k));
}

void BM_window_stats(benchmark::State& state)
{
    const ScalarImage a = texture(static_cast<int>(state.range(0)));
    ScalarImage b = a;
    for (double& v : b.data())
        v = 0.5 * v + 0.1;
    for (auto _ : state)
        benchmark::DoNotOptimize(window_stats(a, b));
}

void BM_window_stats_reference(benchmark::State& state)
{
    const ScalarImage a = texture(static_cast<int>(state.range(0)));
    ScalarImage b = a;
    for (double& v : b.data())
        v = 0.5 * v + 0.1;
    for (auto _ : state)
        benchmark::DoNotOptimize(reference::window_stats(a, b));
}

void BM_psi_update(benchmark::State& state)
{
    const Field g = random_field(state.range(0), 2);
    for (auto _ : state)
        benchmark::DoNotOptimize(psi_update(g, 0.3, 2.0, 0.5));
}

void BM_psi_update_reference(benchmark::State& state)
{
    const Field g = random_field(state.range(0), 2);
    for (auto _ : state)
        benchmark::DoNotOptimize(reference::psi_update(g, 0.3, 2.0, 0.5));
}

void BM_operator_apply(benchmark::State& state)
{
    const TriangleMesh m = make_cube(static_cast<int>(state.range(0)));
    const EdgeDifferentialOperator d = build_edge_operator(m);
    for (auto _ : state)
        benchmark::DoNotOptimize(d.apply(m.vertices()));
}

void BM_operator_apply_reference(benchmark::State& state)
{
    const TriangleMesh m = make_cube(static_cast<int>(state.range(0)));
    const EdgeDifferentialOperator d = build_edge_operator(m);
    for (auto _ : state)
        benchmark::DoNotOptimize(reference::apply(d, m.vertices()));
}

void BM_data_gradient(benchmark::State& state)
{
    SyntheticSpec s;
    s.kind = SyntheticKind::step_edge;
    s.resolution = static_cast<int>(state.range(0));
    const StereoBundle b = generate_stereo(s);
    for (auto _ : state)
        benchmark::DoNotOptimize(data_gradient(b.reference, b.auxiliary, b.true_depth, b.cameras, 0.1));
}

} // namespace

BENCHMARK(BM_masked_convolve)->Arg(64)->Arg(256);
BENCHMARK(BM_masked_convolve_reference)->Arg(64)->Arg(256);
BENCHMARK(BM_window_stats)->Arg(64)->Arg(256);
BENCHMARK(BM_window_stats_reference)->Arg(64)->Arg(256);
BENCHMARK(BM_psi_update)->Arg(10000)->Arg(100000);
BENCHMARK(BM_psi_update_reference)->Arg(10000)->Arg(100000);
BENCHMARK(BM_operator_apply)->Arg(20)->Arg(60);
BENCHMARK(BM_operator_apply_reference)->Arg(20)->Arg(60);
BENCHMARK(BM_data_gradient)->Arg(64)->Arg(128);

BENCHMARK_MAIN();
