#pragma once

#include "darbs/fit_common.hpp"
#include "darbs/image.hpp"
#include "darbs/rasterizer.hpp"

namespace darbs {

// One 2D splat parameterized for unconstrained optimization: covariance
// through log-scales and a rotation angle, opacity and color through
// sigmoids.
struct Splat2DParams {
    Vec2 mu2 = Vec2::Zero();
    Vec2 log_scale = Vec2::Zero();  // sigma_i = exp(log_scale_i), pixels
    double angle = 0.0;             // radians
    double opacity_logit = 0.0;
    Vec3 color_logit = Vec3::Zero();
};

// Materializes the renderable splat: cov2 = R diag(exp(2*ls)) R^T, conic and
// radius from the kernel cutoff, depth = list position for a stable blend
// order.
ProjectedSplat realize_splat2d(const Splat2DParams& p, const KernelSpec& kernel, double depth);

struct Fit2DResult {
    FitReport report;
    ImageBuffer rendered;
    std::vector<Splat2DParams> splats;
};

// Optimizes N 2D splats against the L1 + D-SSIM loss with Adam, using the
// tiled rasterizer forward/backward. Initialization is seeded over the image
// domain with colors sampled from the target.
Fit2DResult fit_image(const ImageBuffer& target, const KernelSpec& kernel, int n_splats,
                      const FitConfig& config);

}  // namespace darbs
