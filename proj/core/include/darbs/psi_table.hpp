#pragma once

#include <optional>
#include <string>

namespace darbs {

// Frozen default correction factors per kernel preset. `published` entries
// come straight from the reference value for the half-cosine-squared kernel;
// the rest were produced by the Monte Carlo calibrator under its default
// configuration (grid 96, 64 trials, eigenvalues in [0.5, 2.0]) and frozen
// here as regression anchors. The Gaussian value is exact: marginalizing a
// Gaussian preserves the covariance submatrix.
struct PsiDefault {
    const char* preset;
    double psi;
    const char* provenance;  // "analytic", "published" or "calibrated"
};

inline constexpr PsiDefault kPsiDefaults[] = {
    {"gaussian", 1.0, "analytic"},
    {"half-cosine-sq", 1.36, "published"},
    {"raised-cosine", 0.6552, "calibrated"},
    {"mod-sinc", 1.1762, "calibrated"},
    {"inv-multiquadratic", 1.6054, "calibrated"},
};

inline std::optional<PsiDefault> default_psi(const std::string& preset) {
    for (const auto& row : kPsiDefaults) {
        if (preset == row.preset) return row;
    }
    return std::nullopt;
}

}  // namespace darbs
