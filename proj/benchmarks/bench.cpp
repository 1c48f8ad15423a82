// Microbenchmarks for the hot paths: kernel evaluation, tile-based
// compositing (forward and backward), covariance projection and the
// calibration density grid.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "darbs/calibration.hpp"
#include "darbs/geometry.hpp"
#include "darbs/kernel.hpp"
#include "darbs/loss.hpp"
#include "darbs/rasterizer.hpp"

using namespace darbs;

namespace {

std::vector<ProjectedSplat> random_scene(int count, int width, int height,
                                         const KernelSpec& kernel, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(-5.0, width + 5.0);
    std::uniform_real_distribution<double> uy(-5.0, height + 5.0);
    std::uniform_real_distribution<double> uvar(0.6, 12.0);
    std::uniform_real_distribution<double> ucorr(-0.6, 0.6);
    std::uniform_real_distribution<double> uop(0.1, 0.95);
    std::uniform_real_distribution<double> ucol(0.0, 1.0);
    std::uniform_real_distribution<double> udep(0.5, 9.5);
    std::vector<ProjectedSplat> splats;
    for (int i = 0; i < count; ++i) {
        double a = uvar(rng), c = uvar(rng);
        double b = ucorr(rng) * std::sqrt(a * c);
        ProjectedSplat s;
        s.mu2 = Vec2(ux(rng), uy(rng));
        s.cov2 << a, b, b, c;
        ConicRadius cr = conic_and_radius(s.cov2, kernel);
        s.conic = cr.conic;
        s.radius = cr.radius;
        s.depth = udep(rng);
        s.opacity = uop(rng);
        s.color = Vec3(ucol(rng), ucol(rng), ucol(rng));
        splats.push_back(s);
    }
    return splats;
}

void bm_kernel_eval(benchmark::State& state, const char* preset) {
    KernelSpec k = *kernel_preset(preset);
    double dm2 = 0.0;
    for (auto _ : state) {
        dm2 += 1e-3;
        if (dm2 > 8.0) dm2 = 0.0;
        benchmark::DoNotOptimize(eval(k, dm2));
    }
}

void bm_forward(benchmark::State& state) {
    KernelSpec k = *kernel_preset("gaussian");
    auto splats = random_scene(int(state.range(0)), 128, 128, k, 7);
    for (auto _ : state) {
        benchmark::DoNotOptimize(forward(splats, k, 128, 128, Vec3::Zero()));
    }
}

void bm_backward(benchmark::State& state) {
    KernelSpec k = *kernel_preset("gaussian");
    auto splats = random_scene(int(state.range(0)), 128, 128, k, 7);
    ForwardResult fwd = forward(splats, k, 128, 128, Vec3::Zero());
    ImageBuffer g(128, 128);
    for (double& v : g.rgb) v = 1.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(backward(g, splats, k, fwd.aux));
    }
}

void bm_projection(benchmark::State& state) {
    Primitive3D prim;
    prim.mu = Vec3(0.1, -0.2, 0.3);
    prim.scale = Vec3(0.2, 0.3, 0.15);
    Camera cam;
    cam.fx = cam.fy = 100;
    cam.cx = cam.cy = 64;
    cam.width = cam.height = 128;
    cam.w.topRightCorner<3, 1>() = Vec3(0, 0, 3);
    KernelSpec k = *kernel_preset("gaussian");
    for (auto _ : state) {
        benchmark::DoNotOptimize(project_primitive(prim, cam, k, 1.0));
    }
}

void bm_density_grid(benchmark::State& state) {
    KernelSpec k = *kernel_preset("half-cosine-sq");
    Covariance3 sigma = random_covariance(3, 0.5, 2.0);
    int n = int(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            density_grid(k, Vec3::Zero(), sigma, n, Vec3(6, 6, 6)));
    }
}

void bm_loss(benchmark::State& state) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ImageBuffer x(64, 64), y(64, 64);
    for (double& v : x.rgb) v = u(rng);
    for (double& v : y.rgb) v = u(rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(loss_total(x, y, 0.2));
    }
}

BENCHMARK_CAPTURE(bm_kernel_eval, gaussian, "gaussian");
BENCHMARK_CAPTURE(bm_kernel_eval, half_cosine_sq, "half-cosine-sq");
BENCHMARK_CAPTURE(bm_kernel_eval, mod_sinc, "mod-sinc");
BENCHMARK(bm_forward)->Arg(200)->Arg(1000);
BENCHMARK(bm_backward)->Arg(200)->Arg(1000);
BENCHMARK(bm_projection);
BENCHMARK(bm_density_grid)->Arg(48)->Arg(96);
BENCHMARK(bm_loss);

}  // namespace

BENCHMARK_MAIN();
