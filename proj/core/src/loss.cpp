#include "darbs/loss.hpp"

#include <array>
#include <cmath>
#include <vector>

#include "darbs/errors.hpp"

namespace darbs {

namespace {

constexpr int kWin = 11;
constexpr int kHalf = kWin / 2;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

const std::array<double, kWin>& window_1d() {
    static const std::array<double, kWin> w = [] {
        std::array<double, kWin> out{};
        double sum = 0.0;
        for (int i = 0; i < kWin; ++i) {
            double d = i - kHalf;
            out[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
            sum += out[i];
        }
        for (double& v : out) v /= sum;
        return out;
    }();
    return w;
}

// Symmetric (mirror) padding index.
inline int reflect(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

using Plane = std::vector<double>;  // width * height, row-major

// The 11x11 Gaussian window is separable; both moment filtering and its
// adjoint (the gradient scatter) run as two 1D passes with mirror padding.
void filter_x(const Plane& in, Plane& out, int w, int h) {
    const auto& k = window_1d();
    for (int y = 0; y < h; ++y) {
        const double* row = in.data() + std::size_t(y) * w;
        double* orow = out.data() + std::size_t(y) * w;
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int d = -kHalf; d <= kHalf; ++d) {
                acc += k[d + kHalf] * row[reflect(x + d, w)];
            }
            orow[x] = acc;
        }
    }
}

void filter_y(const Plane& in, Plane& out, int w, int h) {
    const auto& k = window_1d();
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) {
            double acc = 0.0;
            for (int d = -kHalf; d <= kHalf; ++d) {
                acc += k[d + kHalf] * in[std::size_t(reflect(y + d, h)) * w + x];
            }
            out[std::size_t(y) * w + x] = acc;
        }
    }
}

void scatter_x(const Plane& in, Plane& out, int w, int h) {
    const auto& k = window_1d();
    std::fill(out.begin(), out.end(), 0.0);
    for (int y = 0; y < h; ++y) {
        const double* row = in.data() + std::size_t(y) * w;
        double* orow = out.data() + std::size_t(y) * w;
        for (int x = 0; x < w; ++x) {
            double v = row[x];
            if (v == 0.0) continue;
            for (int d = -kHalf; d <= kHalf; ++d) {
                orow[reflect(x + d, w)] += k[d + kHalf] * v;
            }
        }
    }
}

void scatter_y(const Plane& in, Plane& out, int w, int h) {
    const auto& k = window_1d();
    std::fill(out.begin(), out.end(), 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double v = in[std::size_t(y) * w + x];
            if (v == 0.0) continue;
            for (int d = -kHalf; d <= kHalf; ++d) {
                out[std::size_t(reflect(y + d, h)) * w + x] += k[d + kHalf] * v;
            }
        }
    }
}

void filter_2d(const Plane& in, Plane& out, Plane& tmp, int w, int h) {
    filter_x(in, tmp, w, h);
    filter_y(tmp, out, w, h);
}

// Adjoint of filter_2d under mirror padding: transpose of each pass, applied
// in reverse order.
void scatter_2d(const Plane& in, Plane& out, Plane& tmp, int w, int h) {
    scatter_y(in, tmp, w, h);
    scatter_x(tmp, out, w, h);
}

struct SsimTerms {
    double value;
    double d_mu_x;  // partials holding the raw moments fixed
    double d_sxx;
    double d_sxy;
};

SsimTerms ssim_terms(double mu_x, double mu_y, double sxx, double syy, double sxy) {
    double var_x = sxx - mu_x * mu_x;
    double var_y = syy - mu_y * mu_y;
    double cov = sxy - mu_x * mu_y;
    double a1 = 2.0 * mu_x * mu_y + kC1;
    double a2 = 2.0 * cov + kC2;
    double b1 = mu_x * mu_x + mu_y * mu_y + kC1;
    double b2 = var_x + var_y + kC2;
    double denom = b1 * b2;
    SsimTerms t;
    t.value = a1 * a2 / denom;
    t.d_mu_x = 2.0 * mu_y * (a2 - a1) / denom -
               2.0 * mu_x * a1 * a2 * (b2 - b1) / (denom * denom);
    t.d_sxx = -a1 * a2 / (b1 * b2 * b2);
    t.d_sxy = 2.0 * a1 / denom;
    return t;
}

}  // namespace

double ssim(const ImageBuffer& a, const ImageBuffer& b) {
    if (a.width != b.width || a.height != b.height) {
        throw invalid_parameter("ssim: dimension mismatch");
    }
    const int w = a.width, h = a.height;
    const std::size_t np = std::size_t(w) * h;
    Plane x(np), y(np), buf(np), tmp(np);
    Plane mu_x(np), mu_y(np), sxx(np), syy(np), sxy(np);
    double acc = 0.0;
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < np; ++i) {
            x[i] = a.rgb[i * 3 + c];
            y[i] = b.rgb[i * 3 + c];
        }
        filter_2d(x, mu_x, tmp, w, h);
        filter_2d(y, mu_y, tmp, w, h);
        for (std::size_t i = 0; i < np; ++i) buf[i] = x[i] * x[i];
        filter_2d(buf, sxx, tmp, w, h);
        for (std::size_t i = 0; i < np; ++i) buf[i] = y[i] * y[i];
        filter_2d(buf, syy, tmp, w, h);
        for (std::size_t i = 0; i < np; ++i) buf[i] = x[i] * y[i];
        filter_2d(buf, sxy, tmp, w, h);
        for (std::size_t i = 0; i < np; ++i) {
            acc += ssim_terms(mu_x[i], mu_y[i], sxx[i], syy[i], sxy[i]).value;
        }
    }
    return acc / (3.0 * np);
}

LossResult loss_total(const ImageBuffer& rendered, const ImageBuffer& target, double lambda) {
    if (rendered.width != target.width || rendered.height != target.height) {
        throw invalid_parameter("loss_total: dimension mismatch");
    }
    const int w = rendered.width, h = rendered.height;
    const std::size_t np = std::size_t(w) * h;
    const std::size_t n = rendered.rgb.size();
    LossResult res;
    res.grad = ImageBuffer(w, h);

    for (std::size_t i = 0; i < n; ++i) {
        double d = rendered.rgb[i] - target.rgb[i];
        res.l1 += std::abs(d);
        res.grad.rgb[i] = (1.0 - lambda) * ((d > 0) - (d < 0)) / double(n);
    }
    res.l1 /= double(n);

    Plane x(np), y(np), buf(np), tmp(np);
    Plane mu_x(np), mu_y(np), sxx(np), syy(np), sxy(np);
    Plane fa(np), fb(np), fd(np), sa(np), sb(np), sd(np);
    double ssim_acc = 0.0;
    // dL/dSSIM = -lambda/2, spread over the window taps through the adjoint
    // filters.
    const double scale = -0.5 * lambda / double(n);
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < np; ++i) {
            x[i] = rendered.rgb[i * 3 + c];
            y[i] = target.rgb[i * 3 + c];
        }
        filter_2d(x, mu_x, tmp, w, h);
        filter_2d(y, mu_y, tmp, w, h);
        for (std::size_t i = 0; i < np; ++i) buf[i] = x[i] * x[i];
        filter_2d(buf, sxx, tmp, w, h);
        for (std::size_t i = 0; i < np; ++i) buf[i] = y[i] * y[i];
        filter_2d(buf, syy, tmp, w, h);
        for (std::size_t i = 0; i < np; ++i) buf[i] = x[i] * y[i];
        filter_2d(buf, sxy, tmp, w, h);

        for (std::size_t i = 0; i < np; ++i) {
            SsimTerms t = ssim_terms(mu_x[i], mu_y[i], sxx[i], syy[i], sxy[i]);
            ssim_acc += t.value;
            fa[i] = scale * t.d_mu_x;
            fb[i] = scale * t.d_sxx;
            fd[i] = scale * t.d_sxy;
        }
        if (lambda == 0.0) continue;
        scatter_2d(fa, sa, tmp, w, h);
        scatter_2d(fb, sb, tmp, w, h);
        scatter_2d(fd, sd, tmp, w, h);
        for (std::size_t i = 0; i < np; ++i) {
            res.grad.rgb[i * 3 + c] += sa[i] + 2.0 * x[i] * sb[i] + y[i] * sd[i];
        }
    }
    double mean_ssim = ssim_acc / double(n);
    res.dssim = 0.5 * (1.0 - mean_ssim);
    res.total = (1.0 - lambda) * res.l1 + lambda * res.dssim;
    return res;
}

}  // namespace darbs
