#include "darbs/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "darbs/errors.hpp"

namespace darbs {

namespace {

constexpr double kPi = std::numbers::pi;

// Fixed render bound (in d_M units) for the infinite-support families,
// matching R = 3 * sqrt(max eigenvalue) of the reference rasterizer.
constexpr double kRenderCutoffDm = 3.0;

bool is_bounded(KernelFamily f) {
    return f == KernelFamily::HalfCosine || f == KernelFamily::RaisedCosine ||
           f == KernelFamily::ModulusSinc;
}

// Domain limit expressed on u = d_M^beta / xi.
double u_limit(const KernelSpec& s) {
    switch (s.family) {
        case KernelFamily::HalfCosine:
            return kPi / 2.0;
        case KernelFamily::RaisedCosine:
            return s.lobes * kPi;
        case KernelFamily::ModulusSinc:
            return (s.lobes + 1) * kPi / 2.0;
        default:
            return std::numeric_limits<double>::infinity();
    }
}

}  // namespace

KernelSpec make_kernel(KernelFamily family, double beta, double xi, int lobes) {
    if (!(beta > 0.0) || !std::isfinite(beta)) {
        throw invalid_parameter("kernel beta must be positive");
    }
    if (!(xi > 0.0) || !std::isfinite(xi)) {
        throw invalid_parameter("kernel xi must be positive");
    }
    if (lobes < 1) {
        throw invalid_parameter("kernel lobes must be >= 1");
    }
    KernelSpec s;
    s.family = family;
    s.beta = beta;
    s.xi = xi;
    s.lobes = lobes;
    s.unbounded = !is_bounded(family);
    if (s.unbounded) {
        s.cutoff = kRenderCutoffDm * kRenderCutoffDm;
    } else {
        // u <= u_limit  <=>  d_M^2 <= (xi * u_limit)^(2/beta)
        s.cutoff = std::pow(xi * u_limit(s), 2.0 / beta);
    }
    return s;
}

double cutoff_dm2(const KernelSpec& spec) { return spec.cutoff; }

namespace {

// Weight and derivative as a function of u = d_M^beta / xi, for the families
// expressed through u. Returns {f(u), f'(u)}.
inline void family_fu(KernelFamily fam, double u, double& f, double& df) {
    switch (fam) {
        case KernelFamily::Gaussian:
            f = std::exp(-u);
            df = -f;
            return;
        case KernelFamily::HalfCosine:
            f = std::cos(u);
            df = -std::sin(u);
            return;
        case KernelFamily::RaisedCosine:
            f = 0.5 + 0.5 * std::cos(u);
            df = -0.5 * std::sin(u);
            return;
        case KernelFamily::ModulusSinc: {
            if (u < 1e-8) {
                f = 1.0 - u * u / 6.0;
                df = -u / 3.0;
                return;
            }
            double s = std::sin(u);
            double sgn = (s > 0.0) - (s < 0.0);  // sign(0) = 0 at lobe joints
            f = std::abs(s) / u;
            df = sgn * (u * std::cos(u) - s) / (u * u);
            return;
        }
        default:
            f = 0.0;
            df = 0.0;
            return;
    }
}

// Derivative limit of dw/d(dm2) at the center, where the 1/(2 d_M) chain
// factor is singular for odd beta. Finite limits exist for beta == 1 in the
// cosine/sinc families and beta == 2 in the Gaussian; otherwise 0.
double center_dweight(const KernelSpec& s) {
    switch (s.family) {
        case KernelFamily::Gaussian:
            return s.beta == 2.0 ? -1.0 / s.xi : 0.0;
        case KernelFamily::HalfCosine:
            return s.beta == 1.0 ? -1.0 / (2.0 * s.xi * s.xi) : 0.0;
        case KernelFamily::RaisedCosine:
            return s.beta == 1.0 ? -1.0 / (4.0 * s.xi * s.xi) : 0.0;
        case KernelFamily::ModulusSinc:
            return s.beta == 1.0 ? -1.0 / (6.0 * s.xi * s.xi) : 0.0;
        case KernelFamily::InverseMultiquadratic:
            return -1.0 / (2.0 * s.xi);
    }
    return 0.0;
}

}  // namespace

KernelSample eval(const KernelSpec& spec, double dm2) {
    if (dm2 < 0.0 || !std::isfinite(dm2)) {
        throw invalid_parameter("eval: dm2 must be finite and non-negative");
    }
    KernelSample out;
    out.dm2 = dm2;
    // Bounded supports close at the boundary so the footprint vanishes
    // identically on and beyond the cutoff instead of leaving a rounding
    // residue there; the render bound of unbounded families stays half-open.
    if (spec.unbounded ? dm2 > spec.cutoff : dm2 >= spec.cutoff) {
        return out;
    }
    if (spec.family == KernelFamily::InverseMultiquadratic) {
        double base = dm2 / spec.xi + 1.0;
        double r = 1.0 / std::sqrt(base);
        out.weight = r;
        out.dweight_ddm2 = -0.5 * r / (base * spec.xi);
        return out;
    }
    if (dm2 < 1e-30) {
        double f, df;
        family_fu(spec.family, 0.0, f, df);
        out.weight = f;
        out.dweight_ddm2 = center_dweight(spec);
        return out;
    }
    double u = (spec.beta == 2.0) ? dm2 / spec.xi
                                  : std::pow(dm2, 0.5 * spec.beta) / spec.xi;
    double f, df;
    family_fu(spec.family, u, f, df);
    // u = dm2^(beta/2) / xi  =>  du/d(dm2) = (beta/2) dm2^(beta/2 - 1) / xi
    double du = (spec.beta == 2.0)
                    ? 1.0 / spec.xi
                    : 0.5 * spec.beta * std::pow(dm2, 0.5 * spec.beta - 1.0) / spec.xi;
    out.weight = std::clamp(f, 0.0, 1.0);
    out.dweight_ddm2 = df * du;
    return out;
}

double eval_analytic(const KernelSpec& spec, double dm2) {
    // The gaussian's tail integrals converge, so its calibration density uses
    // the full analytic expression. The inverse multiquadratic's second
    // moments diverge, leaving the render-truncated footprint as the only
    // density with a well-defined covariance, so it keeps the cutoff.
    if (spec.family == KernelFamily::Gaussian) {
        double u = (spec.beta == 2.0) ? dm2 / spec.xi
                                      : std::pow(dm2, 0.5 * spec.beta) / spec.xi;
        return std::exp(-u);
    }
    return eval(spec, dm2).weight;
}

double derive_xi(KernelFamily family, double beta, int lobes) {
    if (!(beta > 0.0) || lobes < 1) {
        throw invalid_parameter("derive_xi: invalid beta/lobes");
    }
    double target = std::pow(3.0, beta);  // d_M^beta at the matched extent
    switch (family) {
        case KernelFamily::Gaussian:
            // Extent is the fixed render bound for any xi; return the
            // conventional footprint scaling exp(-dm2/2).
            return 2.0;
        case KernelFamily::HalfCosine:
            return 2.0 * target / kPi;
        case KernelFamily::RaisedCosine:
            return target / (lobes * kPi);
        case KernelFamily::ModulusSinc:
            return 2.0 * target / ((lobes + 1) * kPi);
        case KernelFamily::InverseMultiquadratic:
            throw invalid_parameter(
                "derive_xi: inverse multiquadratic has infinite support, xi is free");
    }
    throw invalid_parameter("derive_xi: unknown family");
}

double grad_check_kernel(const KernelSpec& spec, int samples, double step,
                         std::uint64_t seed) {
    if (samples <= 0 || !(step > 0.0)) {
        throw invalid_parameter("grad_check_kernel: samples and step must be positive");
    }
    std::mt19937_64 rng(seed);
    double lo = 10.0 * step;
    double hi = spec.cutoff - 10.0 * step;
    std::uniform_real_distribution<double> dist(lo, hi);
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
        double dm2 = dist(rng);
        double analytic = eval(spec, dm2).dweight_ddm2;
        double fd = (eval(spec, dm2 + step).weight - eval(spec, dm2 - step).weight) /
                    (2.0 * step);
        double denom = std::max({std::abs(analytic), std::abs(fd), 1e-8});
        worst = std::max(worst, std::abs(analytic - fd) / denom);
    }
    return worst;
}

std::optional<KernelSpec> kernel_preset(const std::string& name) {
    if (name == "gaussian") {
        return make_kernel(KernelFamily::Gaussian, 2.0, 2.0);
    }
    if (name == "half-cosine-sq") {
        return make_kernel(KernelFamily::HalfCosine, 2.0, 18.0 / kPi);
    }
    if (name == "raised-cosine") {
        return make_kernel(KernelFamily::RaisedCosine, 1.0, 2.5 / kPi);
    }
    if (name == "mod-sinc") {
        return make_kernel(KernelFamily::ModulusSinc, 1.0, 3.0 / kPi);
    }
    if (name == "inv-multiquadratic") {
        return make_kernel(KernelFamily::InverseMultiquadratic, 2.0, 1.0);
    }
    return std::nullopt;
}

const char* family_name(KernelFamily family) {
    switch (family) {
        case KernelFamily::Gaussian:
            return "gaussian";
        case KernelFamily::HalfCosine:
            return "half-cosine-sq";
        case KernelFamily::RaisedCosine:
            return "raised-cosine";
        case KernelFamily::ModulusSinc:
            return "mod-sinc";
        case KernelFamily::InverseMultiquadratic:
            return "inv-multiquadratic";
    }
    return "unknown";
}

}  // namespace darbs
