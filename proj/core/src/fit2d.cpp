#include "darbs/fit2d.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include "darbs/errors.hpp"
#include "darbs/loss.hpp"
#include "darbs/optim.hpp"

namespace darbs {

namespace {

constexpr int kParamsPerSplat = 9;  // mu(2) + log_scale(2) + angle + opacity + color(3)

Mat2 rotation2(double angle) {
    double c = std::cos(angle), s = std::sin(angle);
    Mat2 r;
    r << c, -s, s, c;
    return r;
}

}  // namespace

ProjectedSplat realize_splat2d(const Splat2DParams& p, const KernelSpec& kernel, double depth) {
    Mat2 r = rotation2(p.angle);
    Vec2 s(std::exp(p.log_scale.x()), std::exp(p.log_scale.y()));
    Mat2 m = r * s.asDiagonal();
    ProjectedSplat out;
    out.mu2 = p.mu2;
    out.cov2 = m * m.transpose();
    ConicRadius cr = conic_and_radius(out.cov2, kernel);
    out.conic = cr.conic;
    out.radius = cr.radius;
    out.depth = depth;
    out.opacity = sigmoid(p.opacity_logit);
    out.color = Vec3(sigmoid(p.color_logit.x()), sigmoid(p.color_logit.y()),
                     sigmoid(p.color_logit.z()));
    return out;
}

Fit2DResult fit_image(const ImageBuffer& target, const KernelSpec& kernel, int n_splats,
                      const FitConfig& config) {
    if (n_splats < 1) {
        throw invalid_parameter("fit_image: n_splats must be >= 1");
    }
    auto t0 = std::chrono::steady_clock::now();
    const int w = target.width, h = target.height;
    const Vec3 background = Vec3::Zero();

    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> ux(0.0, double(w));
    std::uniform_real_distribution<double> uy(0.0, double(h));
    std::uniform_real_distribution<double> uang(0.0, std::numbers::pi);

    double r0 = std::max(1.0, 0.6 * std::sqrt(double(w) * h / n_splats));
    std::vector<Splat2DParams> splats(n_splats);
    for (auto& p : splats) {
        p.mu2 = Vec2(ux(rng), uy(rng));
        p.log_scale = Vec2(std::log(r0), std::log(r0));
        p.angle = uang(rng);
        p.opacity_logit = logit(0.5);
        int px = std::clamp(int(p.mu2.x()), 0, w - 1);
        int py = std::clamp(int(p.mu2.y()), 0, h - 1);
        for (int c = 0; c < 3; ++c) {
            p.color_logit[c] = logit(std::clamp(target.at(px, py, c), 0.02, 0.98));
        }
    }

    const std::size_t dim = std::size_t(n_splats) * kParamsPerSplat;
    std::vector<double> params(dim), grads(dim), lrs(dim);
    double extent = std::max(w, h);
    for (int i = 0; i < n_splats; ++i) {
        double* q = params.data() + std::size_t(i) * kParamsPerSplat;
        const auto& p = splats[i];
        q[0] = p.mu2.x(); q[1] = p.mu2.y();
        q[2] = p.log_scale.x(); q[3] = p.log_scale.y();
        q[4] = p.angle;
        q[5] = p.opacity_logit;
        q[6] = p.color_logit.x(); q[7] = p.color_logit.y(); q[8] = p.color_logit.z();
        double* l = lrs.data() + std::size_t(i) * kParamsPerSplat;
        l[0] = l[1] = config.lr_position * extent;
        l[2] = l[3] = config.lr_scale;
        l[4] = config.lr_rotation;
        l[5] = config.lr_opacity;
        l[6] = l[7] = l[8] = config.lr_color;
    }
    AdamState state(dim);

    Fit2DResult result;
    result.report.kernel = kernel;
    result.report.n = n_splats;
    result.report.loss_curve.reserve(config.iters);

    std::vector<ProjectedSplat> rendered_splats(n_splats);
    auto realize_all = [&] {
        for (int i = 0; i < n_splats; ++i) {
            const double* q = params.data() + std::size_t(i) * kParamsPerSplat;
            Splat2DParams p;
            p.mu2 = Vec2(q[0], q[1]);
            p.log_scale = Vec2(q[2], q[3]);
            p.angle = q[4];
            p.opacity_logit = q[5];
            p.color_logit = Vec3(q[6], q[7], q[8]);
            rendered_splats[i] = realize_splat2d(p, kernel, double(i));
        }
    };

    ForwardResult fwd;
    for (int it = 1; it <= config.iters; ++it) {
        realize_all();
        fwd = forward(rendered_splats, kernel, w, h, background, config.threads);
        LossResult loss = loss_total(fwd.image, target, config.lambda);
        if (!std::isfinite(loss.total)) {
            throw numeric_error("fit_image: loss diverged at iteration " + std::to_string(it));
        }
        result.report.loss_curve.push_back(loss.total);
        result.report.l1_curve.push_back(loss.l1);
        result.report.dssim_curve.push_back(loss.dssim);
        result.report.psnr_curve.push_back(psnr(fwd.image, target));

        std::vector<SplatGrads> sg =
            backward(loss.grad, rendered_splats, kernel, fwd.aux, config.threads);

        std::fill(grads.begin(), grads.end(), 0.0);
        for (int i = 0; i < n_splats; ++i) {
            const double* q = params.data() + std::size_t(i) * kParamsPerSplat;
            double* g = grads.data() + std::size_t(i) * kParamsPerSplat;
            const SplatGrads& gi = sg[i];
            const ProjectedSplat& s = rendered_splats[i];

            g[0] = gi.d_mu2.x();
            g[1] = gi.d_mu2.y();

            // Conic gradient as a symmetric-matrix gradient, then back
            // through the inverse: dL/dcov2 = -C * G * C.
            Mat2 gc;
            gc << gi.d_conic_a, 0.5 * gi.d_conic_b, 0.5 * gi.d_conic_b, gi.d_conic_c;
            Mat2 cmat;
            cmat << s.conic.a, s.conic.b, s.conic.b, s.conic.c;
            Mat2 d_cov2 = -cmat * gc * cmat;

            // cov2 = M M^T with M = R(angle) * diag(exp(ls)).
            Mat2 r = rotation2(q[4]);
            Vec2 sc(std::exp(q[2]), std::exp(q[3]));
            Mat2 m = r * sc.asDiagonal();
            Mat2 d_m = 2.0 * d_cov2 * m;
            for (int k = 0; k < 2; ++k) {
                g[2] += d_m(k, 0) * r(k, 0) * sc.x();  // d/d log_scale_0
                g[3] += d_m(k, 1) * r(k, 1) * sc.y();
            }
            Mat2 dr;
            double ca = std::cos(q[4]), sa = std::sin(q[4]);
            dr << -sa, -ca, ca, -sa;
            for (int k = 0; k < 2; ++k) {
                for (int j = 0; j < 2; ++j) {
                    g[4] += d_m(k, j) * dr(k, j) * sc[j];
                }
            }

            g[5] = gi.d_opacity * s.opacity * (1.0 - s.opacity);
            for (int c = 0; c < 3; ++c) {
                g[6 + c] = gi.d_color[c] * s.color[c] * (1.0 - s.color[c]);
            }
        }
        adam_step(params, grads, state, lrs, it);
    }

    realize_all();
    fwd = forward(rendered_splats, kernel, w, h, background, config.threads);
    result.rendered = fwd.image;
    result.report.final_mse = mse(result.rendered, target);
    result.report.final_psnr = psnr(result.rendered, target);
    result.report.final_ssim = ssim(result.rendered, target);
    result.report.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    result.splats.resize(n_splats);
    for (int i = 0; i < n_splats; ++i) {
        const double* q = params.data() + std::size_t(i) * kParamsPerSplat;
        result.splats[i] = Splat2DParams{Vec2(q[0], q[1]), Vec2(q[2], q[3]), q[4], q[5],
                                         Vec3(q[6], q[7], q[8])};
    }
    return result;
}

}  // namespace darbs
