#include "darbs/fit3d.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "darbs/errors.hpp"
#include "darbs/loss.hpp"
#include "darbs/optim.hpp"

namespace darbs {

namespace {

constexpr int kParamsPerPrim = 14;  // mu(3) + log_scale(3) + quat(4) + opacity + color(3)

Primitive3D realize(const double* q) {
    Primitive3D p;
    p.mu = Vec3(q[0], q[1], q[2]);
    p.scale = Vec3(std::exp(q[3]), std::exp(q[4]), std::exp(q[5]));
    p.rot = Eigen::Quaterniond(q[6], q[7], q[8], q[9]);
    p.opacity = sigmoid(q[10]);
    p.color = Vec3(sigmoid(q[11]), sigmoid(q[12]), sigmoid(q[13]));
    return p;
}

}  // namespace

ImageBuffer render_scene(const std::vector<Primitive3D>& prims, const Camera& cam,
                         const KernelSpec& kernel, double psi, const Vec3& background,
                         int threads, double dilation) {
    std::vector<ProjectedSplat> splats;
    splats.reserve(prims.size());
    for (const auto& p : prims) {
        if (auto s = project_primitive(p, cam, kernel, psi, dilation)) {
            splats.push_back(*s);
        }
    }
    return forward(splats, kernel, cam.width, cam.height, background, threads).image;
}

Fit3DResult fit_scene(const std::vector<View>& views, const KernelSpec& kernel, double psi,
                      const std::vector<Primitive3D>& init, const FitConfig& config) {
    if (views.size() < 2) {
        throw invalid_parameter("fit_scene: need at least 2 views");
    }
    if (init.empty()) {
        throw invalid_parameter("fit_scene: empty initial primitive set");
    }
    auto t0 = std::chrono::steady_clock::now();
    const int n = int(init.size());
    const Vec3 background = Vec3::Zero();

    // Spatial extent of the initial means scales the position learning rate,
    // mirroring the reference pipeline's scene-extent convention.
    Vec3 lo = init.front().mu, hi = init.front().mu;
    for (const auto& p : init) {
        lo = lo.cwiseMin(p.mu);
        hi = hi.cwiseMax(p.mu);
    }
    double extent = std::max(1.0, (hi - lo).norm());

    const std::size_t dim = std::size_t(n) * kParamsPerPrim;
    std::vector<double> params(dim), grads(dim), lrs(dim);
    for (int i = 0; i < n; ++i) {
        const Primitive3D& p = init[i];
        double* q = params.data() + std::size_t(i) * kParamsPerPrim;
        q[0] = p.mu.x(); q[1] = p.mu.y(); q[2] = p.mu.z();
        for (int k = 0; k < 3; ++k) {
            if (!(p.scale[k] > 0.0)) {
                throw invalid_parameter("fit_scene: initial scale must be positive");
            }
            q[3 + k] = std::log(p.scale[k]);
        }
        q[6] = p.rot.w(); q[7] = p.rot.x(); q[8] = p.rot.y(); q[9] = p.rot.z();
        q[10] = logit(std::clamp(p.opacity, 0.01, 0.99));
        for (int c = 0; c < 3; ++c) q[11 + c] = logit(std::clamp(p.color[c], 0.01, 0.99));

        double* l = lrs.data() + std::size_t(i) * kParamsPerPrim;
        l[0] = l[1] = l[2] = config.lr_position * extent;
        l[3] = l[4] = l[5] = config.lr_scale;
        l[6] = l[7] = l[8] = l[9] = config.lr_rotation;
        l[10] = config.lr_opacity;
        l[11] = l[12] = l[13] = config.lr_color;
    }
    AdamState state(dim);

    Fit3DResult result;
    result.report.kernel = kernel;
    result.report.n = n;

    std::vector<Primitive3D> prims(n);
    auto realize_all = [&] {
        for (int i = 0; i < n; ++i) {
            prims[i] = realize(params.data() + std::size_t(i) * kParamsPerPrim);
        }
    };

    // One full evaluation over all views; accumulates parameter gradients
    // when with_grad is set and returns view-mean metrics.
    struct IterStats {
        double loss = 0.0, l1 = 0.0, dssim = 0.0, mse = 0.0;
    };
    auto evaluate = [&](bool with_grad) {
        IterStats stats;
        double loss_sum = 0.0;
        if (with_grad) std::fill(grads.begin(), grads.end(), 0.0);
        for (const View& view : views) {
            std::vector<ProjectedSplat> splats;
            std::vector<int> owner;  // splat list index -> primitive index
            for (int i = 0; i < n; ++i) {
                if (auto s = project_primitive(prims[i], view.camera, kernel, psi)) {
                    splats.push_back(*s);
                    owner.push_back(i);
                }
            }
            if (splats.empty()) {
                throw numeric_error("fit_scene: all primitives culled in one view");
            }
            ForwardResult fwd = forward(splats, kernel, view.camera.width, view.camera.height,
                                        background, config.threads);
            LossResult loss = loss_total(fwd.image, view.target, config.lambda);
            if (!std::isfinite(loss.total)) {
                throw numeric_error("fit_scene: loss diverged");
            }
            loss_sum += loss.total;
            stats.l1 += loss.l1;
            stats.dssim += loss.dssim;
            stats.mse += mse(fwd.image, view.target);
            if (!with_grad) continue;

            std::vector<SplatGrads> sg =
                backward(loss.grad, splats, kernel, fwd.aux, config.threads);
            for (std::size_t k = 0; k < splats.size(); ++k) {
                const SplatGrads& gi = sg[k];
                const ProjectedSplat& s = splats[k];
                int i = owner[k];
                double* g = grads.data() + std::size_t(i) * kParamsPerPrim;

                Mat2 gc;
                gc << gi.d_conic_a, 0.5 * gi.d_conic_b, 0.5 * gi.d_conic_b, gi.d_conic_c;
                Mat2 cmat;
                cmat << s.conic.a, s.conic.b, s.conic.b, s.conic.c;
                Mat2 d_cov2 = -cmat * gc * cmat;

                ProjectionGrads pg =
                    backward_projection(d_cov2, gi.d_mu2, prims[i], view.camera, psi);
                g[0] += pg.d_mu.x();
                g[1] += pg.d_mu.y();
                g[2] += pg.d_mu.z();
                for (int a = 0; a < 3; ++a) {
                    g[3 + a] += pg.d_scale[a] * prims[i].scale[a];
                }
                for (int a = 0; a < 4; ++a) g[6 + a] += pg.d_rot[a];
                g[10] += gi.d_opacity * s.opacity * (1.0 - s.opacity);
                for (int c = 0; c < 3; ++c) {
                    g[11 + c] += gi.d_color[c] * s.color[c] * (1.0 - s.color[c]);
                }
            }
        }
        double nv = double(views.size());
        stats.loss = loss_sum / nv;
        stats.l1 /= nv;
        stats.dssim /= nv;
        stats.mse /= nv;
        return stats;
    };
    auto record = [&](const IterStats& s) {
        result.report.loss_curve.push_back(s.loss);
        result.report.l1_curve.push_back(s.l1);
        result.report.dssim_curve.push_back(s.dssim);
        result.report.psnr_curve.push_back(
            s.mse > 0.0 ? -10.0 * std::log10(s.mse) : 99.0);
    };

    if (config.iters == 0) {
        realize_all();
        record(evaluate(false));
    }
    for (int it = 1; it <= config.iters; ++it) {
        realize_all();
        record(evaluate(true));
        adam_step(params, grads, state, lrs, it);
    }

    realize_all();
    result.primitives = prims;
    double mse_sum = 0.0, ssim_sum = 0.0;
    for (const View& view : views) {
        ImageBuffer img = render_scene(prims, view.camera, kernel, psi, background,
                                       config.threads);
        result.per_view_psnr.push_back(psnr(img, view.target));
        mse_sum += mse(img, view.target);
        ssim_sum += ssim(img, view.target);
    }
    result.report.final_mse = mse_sum / double(views.size());
    result.report.final_psnr =
        result.report.final_mse > 0.0 ? -10.0 * std::log10(result.report.final_mse) : 99.0;
    result.report.final_ssim = ssim_sum / double(views.size());
    result.report.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

}  // namespace darbs
