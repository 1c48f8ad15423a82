#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace darbs {

// Reconstruction-kernel families. All are non-negative, decaying functions of
// the squared Mahalanobis distance; the Gaussian is the special case that the
// conventional splatting pipeline assumes.
enum class KernelFamily {
    Gaussian,
    HalfCosine,
    RaisedCosine,
    ModulusSinc,
    InverseMultiquadratic,
};

struct KernelSpec {
    KernelFamily family = KernelFamily::Gaussian;
    double beta = 2.0;  // roll-off exponent of the main lobe
    double xi = 2.0;    // spread scaling, > 0
    int lobes = 1;      // lobes retained for the oscillatory families

    // Squared Mahalanobis render cutoff, precomputed by make_kernel.
    double cutoff = 9.0;

    // True when the analytic support is infinite (Gaussian, inverse
    // multiquadratic); `cutoff` is then only a render bound and density
    // evaluation for calibration ignores it.
    bool unbounded = false;
};

struct KernelSample {
    double dm2 = 0.0;           // squared Mahalanobis distance
    double weight = 0.0;        // footprint value in [0, 1]
    double dweight_ddm2 = 0.0;  // analytic derivative d weight / d dm2
};

// Validates parameters and precomputes the squared-distance cutoff.
// Bounded families use their main-lobe domain limit; unbounded families get
// the fixed render bound d_M <= 3 matching the reference pipeline's radius.
KernelSpec make_kernel(KernelFamily family, double beta, double xi, int lobes = 1);

double cutoff_dm2(const KernelSpec& spec);

// Footprint value and derivative at squared Mahalanobis distance dm2.
// Zero beyond the render cutoff.
KernelSample eval(const KernelSpec& spec, double dm2);

// Calibration-density variant: the gaussian drops the render cutoff (its
// moment integrals converge analytically); every other family keeps its
// cutoff, including the inverse multiquadratic, whose untruncated second
// moments diverge.
double eval_analytic(const KernelSpec& spec, double dm2);

// Solves cutoff_dm = 3 for xi so the kernel's support radius matches the
// Gaussian's three-sigma render extent. InverseMultiquadratic has no finite
// support and no extent-matched xi.
double derive_xi(KernelFamily family, double beta, int lobes = 1);

// Worst relative error between dweight_ddm2 and a central finite difference
// at `samples` random interior points (a band of width 10*step around zero
// and the cutoff is excluded).
double grad_check_kernel(const KernelSpec& spec, int samples, double step,
                         std::uint64_t seed = 42);

// Named presets addressable from config files. The paper-experiment variant
// of the raised cosine (xi = 2.5/pi) is the default preset; the exact
// extent-matched value is available through derive_xi.
std::optional<KernelSpec> kernel_preset(const std::string& name);

const char* family_name(KernelFamily family);

}  // namespace darbs
