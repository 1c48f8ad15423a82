#pragma once

#include <vector>

#include "darbs/geometry.hpp"
#include "darbs/image.hpp"
#include "darbs/kernel.hpp"

namespace darbs {

inline constexpr int kTileSize = 16;
inline constexpr double kAlphaClamp = 0.99;
inline constexpr double kAlphaSkip = 1.0 / 255.0;
inline constexpr double kTransmittanceFloor = 1e-4;

struct TileBins {
    int tiles_x = 0;
    int tiles_y = 0;
    std::vector<std::vector<int>> lists;  // depth-sorted splat indices per tile
};

// A splat lands in every tile its axis-aligned bounding square (center +-
// radius) overlaps. Lists are depth-ascending, ties broken by splat index.
TileBins bin_splats(const std::vector<ProjectedSplat>& splats, int width, int height,
                    int tile = kTileSize);

struct BlendAux {
    int width = 0;
    int height = 0;
    std::size_t splat_count = 0;
    Vec3 background = Vec3::Zero();
    TileBins bins;
    std::vector<double> t_final;    // per pixel
    std::vector<int> processed;     // entries of the tile list consumed per pixel
    std::vector<int> contributors;  // splats actually blended per pixel
    int skipped_nonfinite = 0;      // splats dropped for non-finite conics
};

struct ForwardResult {
    ImageBuffer image;
    BlendAux aux;
};

// Tile-based front-to-back alpha blending.
ForwardResult forward(const std::vector<ProjectedSplat>& splats, const KernelSpec& kernel,
                      int width, int height, const Vec3& background, int threads = 1);

// Reference compositor: per-pixel loop over all depth-sorted splats, no
// tiling, identical alpha and transmittance floors.
ImageBuffer oracle_forward(const std::vector<ProjectedSplat>& splats, const KernelSpec& kernel,
                           int width, int height, const Vec3& background);

struct SplatGrads {
    Vec3 d_color = Vec3::Zero();
    double d_opacity = 0.0;
    double d_conic_a = 0.0;
    double d_conic_b = 0.0;
    double d_conic_c = 0.0;
    Vec2 d_mu2 = Vec2::Zero();
};

// Reverse-order traversal per pixel, reconstructing intermediate
// transmittance from the forward aux. Splats skipped in forward get zero
// gradient. Deterministic for any thread count.
std::vector<SplatGrads> backward(const ImageBuffer& grad_image,
                                 const std::vector<ProjectedSplat>& splats,
                                 const KernelSpec& kernel, const BlendAux& aux,
                                 int threads = 1);

}  // namespace darbs
