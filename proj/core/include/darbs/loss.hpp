#pragma once

#include "darbs/image.hpp"

namespace darbs {

struct LossResult {
    double total = 0.0;
    double l1 = 0.0;
    double dssim = 0.0;      // (1 - SSIM) / 2
    ImageBuffer grad;        // dL/d rendered
};

// Mean SSIM over pixels and channels, 11x11 Gaussian window sigma 1.5,
// C1 = 0.01^2, C2 = 0.03^2 on unit dynamic range, symmetric border padding.
double ssim(const ImageBuffer& a, const ImageBuffer& b);

// L = (1 - lambda) * L1 + lambda * (1 - SSIM) / 2, with its analytic
// gradient with respect to the rendered image.
LossResult loss_total(const ImageBuffer& rendered, const ImageBuffer& target, double lambda);

}  // namespace darbs
