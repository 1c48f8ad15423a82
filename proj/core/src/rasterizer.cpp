#include "darbs/rasterizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

#include "darbs/errors.hpp"
#include "darbs/parallel.hpp"

namespace darbs {

namespace {

bool conic_finite(const Conic& c) {
    return std::isfinite(c.a) && std::isfinite(c.b) && std::isfinite(c.c);
}

inline double conic_dm2(const Conic& c, double dx, double dy) {
    return c.a * dx * dx + 2.0 * c.b * dx * dy + c.c * dy * dy;
}

}  // namespace

TileBins bin_splats(const std::vector<ProjectedSplat>& splats, int width, int height, int tile) {
    TileBins bins;
    bins.tiles_x = (width + tile - 1) / tile;
    bins.tiles_y = (height + tile - 1) / tile;
    bins.lists.assign(std::size_t(bins.tiles_x) * bins.tiles_y, {});

    std::vector<int> order(splats.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return splats[a].depth < splats[b].depth;
    });

    for (int idx : order) {
        const ProjectedSplat& s = splats[idx];
        if (!conic_finite(s.conic) || !std::isfinite(s.radius)) continue;
        int x0 = std::max(0, static_cast<int>(std::floor((s.mu2.x() - s.radius) / tile)));
        int y0 = std::max(0, static_cast<int>(std::floor((s.mu2.y() - s.radius) / tile)));
        int x1 = std::min(bins.tiles_x - 1,
                          static_cast<int>(std::floor((s.mu2.x() + s.radius) / tile)));
        int y1 = std::min(bins.tiles_y - 1,
                          static_cast<int>(std::floor((s.mu2.y() + s.radius) / tile)));
        for (int ty = y0; ty <= y1; ++ty) {
            for (int tx = x0; tx <= x1; ++tx) {
                bins.lists[std::size_t(ty) * bins.tiles_x + tx].push_back(idx);
            }
        }
    }
    return bins;
}

ForwardResult forward(const std::vector<ProjectedSplat>& splats, const KernelSpec& kernel,
                      int width, int height, const Vec3& background, int threads) {
    ForwardResult res;
    res.image = ImageBuffer(width, height);
    BlendAux& aux = res.aux;
    aux.width = width;
    aux.height = height;
    aux.splat_count = splats.size();
    aux.background = background;
    aux.bins = bin_splats(splats, width, height);
    aux.t_final.assign(std::size_t(width) * height, 1.0);
    aux.processed.assign(std::size_t(width) * height, 0);
    aux.contributors.assign(std::size_t(width) * height, 0);

    std::atomic<int> skipped{0};
    for (const ProjectedSplat& s : splats) {
        if (!conic_finite(s.conic) || !std::isfinite(s.radius)) skipped++;
    }
    aux.skipped_nonfinite = skipped.load();

    ImageBuffer& img = res.image;
    std::size_t tile_count = aux.bins.lists.size();
    parallel_for(tile_count, threads, [&](std::size_t t) {
        int tx = static_cast<int>(t) % aux.bins.tiles_x;
        int ty = static_cast<int>(t) / aux.bins.tiles_x;
        const std::vector<int>& list = aux.bins.lists[t];
        int px0 = tx * kTileSize, py0 = ty * kTileSize;
        int px1 = std::min(width, px0 + kTileSize), py1 = std::min(height, py0 + kTileSize);
        for (int y = py0; y < py1; ++y) {
            for (int x = px0; x < px1; ++x) {
                double cx = x + 0.5, cy = y + 0.5;
                double T = 1.0;
                Vec3 color = Vec3::Zero();
                int done = 0, contrib = 0;
                for (int idx : list) {
                    ++done;
                    const ProjectedSplat& s = splats[idx];
                    double dm2 = conic_dm2(s.conic, cx - s.mu2.x(), cy - s.mu2.y());
                    if (dm2 < 0.0) continue;  // numerically indefinite conic
                    double w = eval(kernel, dm2).weight;
                    double alpha = std::min(kAlphaClamp, s.opacity * w);
                    if (alpha < kAlphaSkip) continue;
                    color += s.color * (alpha * T);
                    T *= 1.0 - alpha;
                    ++contrib;
                    if (T < kTransmittanceFloor) break;
                }
                color += background * T;
                std::size_t p = std::size_t(y) * width + x;
                aux.t_final[p] = T;
                aux.processed[p] = done;
                aux.contributors[p] = contrib;
                for (int c = 0; c < 3; ++c) img.at(x, y, c) = color[c];
            }
        }
    });
    return res;
}

ImageBuffer oracle_forward(const std::vector<ProjectedSplat>& splats, const KernelSpec& kernel,
                           int width, int height, const Vec3& background) {
    std::vector<int> order(splats.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return splats[a].depth < splats[b].depth;
    });

    ImageBuffer img(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double cx = x + 0.5, cy = y + 0.5;
            double T = 1.0;
            Vec3 color = Vec3::Zero();
            for (int idx : order) {
                const ProjectedSplat& s = splats[idx];
                if (!conic_finite(s.conic) || !std::isfinite(s.radius)) continue;
                double dm2 = conic_dm2(s.conic, cx - s.mu2.x(), cy - s.mu2.y());
                if (dm2 < 0.0) continue;
                double w = eval(kernel, dm2).weight;
                double alpha = std::min(kAlphaClamp, s.opacity * w);
                if (alpha < kAlphaSkip) continue;
                color += s.color * (alpha * T);
                T *= 1.0 - alpha;
                if (T < kTransmittanceFloor) break;
            }
            color += background * T;
            for (int c = 0; c < 3; ++c) img.at(x, y, c) = color[c];
        }
    }
    return img;
}

std::vector<SplatGrads> backward(const ImageBuffer& grad_image,
                                 const std::vector<ProjectedSplat>& splats,
                                 const KernelSpec& kernel, const BlendAux& aux,
                                 int threads) {
    if (grad_image.width != aux.width || grad_image.height != aux.height ||
        splats.size() != aux.splat_count) {
        throw contract_violation("backward: aux does not match this forward call");
    }

    std::size_t tile_count = aux.bins.lists.size();
    // Per-tile accumulation keyed by position in the tile list, reduced in
    // fixed tile order afterwards so results are thread-count independent.
    std::vector<std::vector<SplatGrads>> tile_grads(tile_count);

    parallel_for(tile_count, threads, [&](std::size_t t) {
        const std::vector<int>& list = aux.bins.lists[t];
        if (list.empty()) return;
        std::vector<SplatGrads>& local = tile_grads[t];
        local.assign(list.size(), SplatGrads{});

        int tx = static_cast<int>(t) % aux.bins.tiles_x;
        int ty = static_cast<int>(t) / aux.bins.tiles_x;
        int px0 = tx * kTileSize, py0 = ty * kTileSize;
        int px1 = std::min(aux.width, px0 + kTileSize);
        int py1 = std::min(aux.height, py0 + kTileSize);

        for (int y = py0; y < py1; ++y) {
            for (int x = px0; x < px1; ++x) {
                std::size_t p = std::size_t(y) * aux.width + x;
                int done = aux.processed[p];
                if (done == 0) continue;
                double cx = x + 0.5, cy = y + 0.5;
                Vec3 g(grad_image.at(x, y, 0), grad_image.at(x, y, 1), grad_image.at(x, y, 2));

                double T = aux.t_final[p];
                Vec3 accum_behind = aux.background * T;  // color composited behind cursor
                for (int li = done - 1; li >= 0; --li) {
                    const ProjectedSplat& s = splats[list[li]];
                    double dx = cx - s.mu2.x(), dy = cy - s.mu2.y();
                    double dm2 = conic_dm2(s.conic, dx, dy);
                    if (dm2 < 0.0) continue;
                    KernelSample ks = eval(kernel, dm2);
                    double alpha_raw = s.opacity * ks.weight;
                    double alpha = std::min(kAlphaClamp, alpha_raw);
                    if (alpha < kAlphaSkip) continue;

                    double t_before = T / (1.0 - alpha);
                    SplatGrads& sg = local[li];
                    sg.d_color += g * (alpha * t_before);

                    double d_alpha = 0.0;
                    for (int c = 0; c < 3; ++c) {
                        d_alpha += g[c] * (s.color[c] * t_before -
                                           accum_behind[c] / (1.0 - alpha));
                    }
                    if (alpha_raw < kAlphaClamp) {  // clamp gates the chain
                        sg.d_opacity += d_alpha * ks.weight;
                        double d_dm2 = d_alpha * s.opacity * ks.dweight_ddm2;
                        sg.d_conic_a += d_dm2 * dx * dx;
                        sg.d_conic_b += d_dm2 * 2.0 * dx * dy;
                        sg.d_conic_c += d_dm2 * dy * dy;
                        // dx = pixel - mu2, so d(dm2)/d(mu2) flips sign
                        sg.d_mu2.x() += -d_dm2 * (2.0 * s.conic.a * dx + 2.0 * s.conic.b * dy);
                        sg.d_mu2.y() += -d_dm2 * (2.0 * s.conic.b * dx + 2.0 * s.conic.c * dy);
                    }
                    accum_behind += s.color * (alpha * t_before);
                    T = t_before;
                }
            }
        }
    });

    std::vector<SplatGrads> grads(splats.size());
    for (std::size_t t = 0; t < tile_count; ++t) {
        const std::vector<int>& list = aux.bins.lists[t];
        for (std::size_t li = 0; li < tile_grads[t].size(); ++li) {
            const SplatGrads& src = tile_grads[t][li];
            SplatGrads& dst = grads[list[li]];
            dst.d_color += src.d_color;
            dst.d_opacity += src.d_opacity;
            dst.d_conic_a += src.d_conic_a;
            dst.d_conic_b += src.d_conic_b;
            dst.d_conic_c += src.d_conic_c;
            dst.d_mu2 += src.d_mu2;
        }
    }
    return grads;
}

}  // namespace darbs
