#pragma once

#include "darbs/fit_common.hpp"
#include "darbs/image.hpp"
#include "darbs/rasterizer.hpp"

namespace darbs {

// Projects every primitive through the camera and composites the visible
// splats; near-plane-culled primitives simply do not contribute.
ImageBuffer render_scene(const std::vector<Primitive3D>& prims, const Camera& cam,
                         const KernelSpec& kernel, double psi, const Vec3& background,
                         int threads = 1, double dilation = kDilation);

struct View {
    Camera camera;
    ImageBuffer target;
};

struct Fit3DResult {
    FitReport report;                 // loss averaged over views per iteration
    std::vector<Primitive3D> primitives;
    std::vector<double> per_view_psnr;
};

// Optimizes a fixed set of 3D primitives (position, scale, rotation, opacity,
// color) against the L1 + D-SSIM loss summed over all views each iteration.
// Scales stay positive through a log reparameterization, opacity and color
// through sigmoids, and the stored quaternion is free with normalization in
// the forward pass. No densification: the primitive count never changes.
Fit3DResult fit_scene(const std::vector<View>& views, const KernelSpec& kernel, double psi,
                      const std::vector<Primitive3D>& init, const FitConfig& config);

}  // namespace darbs
