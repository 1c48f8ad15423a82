#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "darbs/kernel.hpp"

namespace darbs {

// Shared optimization configuration for the image and scene experiments.
// Learning rates follow the reference splatting pipeline's published
// defaults, with the opacity rate raised to 0.02; the position rate is
// multiplied by the spatial extent of the problem.
struct FitConfig {
    double lambda = 0.2;  // loss mix: (1-lambda)*L1 + lambda*D-SSIM
    double lr_position = 0.00016;
    double lr_scale = 0.005;
    double lr_rotation = 0.001;
    double lr_opacity = 0.02;
    double lr_color = 0.0025;
    int iters = 2000;
    std::uint64_t seed = 0;
    int threads = 1;
};

struct FitReport {
    std::vector<double> loss_curve;  // total loss per iteration
    std::vector<double> l1_curve;
    std::vector<double> dssim_curve;
    std::vector<double> psnr_curve;
    double final_mse = 0.0;
    double final_psnr = 0.0;
    double final_ssim = 0.0;
    double wall_time = 0.0;
    KernelSpec kernel;
    int n = 0;  // splat / primitive count
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace darbs
