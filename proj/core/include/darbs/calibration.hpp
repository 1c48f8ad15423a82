#pragma once

#include <cstdint>
#include <vector>

#include "darbs/geometry.hpp"
#include "darbs/kernel.hpp"

namespace darbs {

// Regular n^3 sample grid of kernel density values.
struct DensityGrid {
    int n = 0;
    Vec3 extent = Vec3::Zero();  // half-width per axis, world units
    std::vector<double> values;  // n*n*n, index (i*n + j)*n + k for (x, y, z)

    double& at(int i, int j, int k) { return values[(std::size_t(i) * n + j) * n + k]; }
    double at(int i, int j, int k) const { return values[(std::size_t(i) * n + j) * n + k]; }

    // Sample coordinate along one axis, index 0..n-1 spanning [-extent, extent].
    double coord(int axis, int idx) const {
        return -extent[axis] + 2.0 * extent[axis] * idx / (n - 1);
    }
};

struct Density2D {
    int n = 0;
    Vec3 extent = Vec3::Zero();  // of the source grid
    int axis_u = 0, axis_v = 1;  // surviving axes after the collapse
    std::vector<double> values;  // n*n, index i*n + j for (u, v)
};

struct CalibrationConfig {
    int grid_n = 96;
    double extent_margin = 1.2;  // extent = margin * cutoff radius per axis
    int trials = 64;
    double eig_min = 0.5;
    double eig_max = 2.0;
};

struct PsiEstimate {
    KernelSpec kernel;
    double psi = 0.0;
    double std_dev = 0.0;
    int trials = 0;
    int aborted = 0;
    CalibrationConfig config;
};

enum class Axis { X = 0, Y = 1, Z = 2 };

// Samples the kernel density on a regular grid around mu. The gaussian is
// evaluated without its render cutoff (analytic moments converge); all other
// families keep their cutoff.
DensityGrid density_grid(const KernelSpec& spec, const Vec3& mu, const Covariance3& sigma,
                         int n, const Vec3& extent);

// Sums the grid along one axis and divides by the maximum.
Density2D collapse_and_normalize(const DensityGrid& grid, Axis axis);

struct WeightedCov {
    Vec2 mean = Vec2::Zero();
    Mat2 cov = Mat2::Zero();
};

WeightedCov weighted_covariance(const Density2D& density);

// Least-squares scalar ratio <submatrix, measured>_F / <submatrix, submatrix>_F.
double fit_psi(const Mat2& measured, const Mat2& submatrix);

// Monte Carlo estimate over random covariances: per trial, draw eigenvalues
// uniform in [eig_min, eig_max] with a uniform random rotation, build the
// density grid, collapse along z and fit psi against the upper-left 2x2 of
// Sigma. Deterministic for a fixed seed regardless of thread count.
PsiEstimate estimate_psi(const KernelSpec& spec, const CalibrationConfig& config,
                         std::uint64_t seed, int threads = 1);

// Random covariance used by the trials; exposed for tests.
Covariance3 random_covariance(std::uint64_t seed, double eig_min, double eig_max);

struct PsiSensitivityRow {
    double eig_min = 0.0;
    double eig_max = 0.0;
    double psi = 0.0;
    double std_dev = 0.0;
};

// psi as a function of the eigenvalue sampling range; reported when the
// frozen defaults fail to reproduce a published value.
std::vector<PsiSensitivityRow> psi_sensitivity(const KernelSpec& spec,
                                               const CalibrationConfig& config,
                                               std::uint64_t seed, int threads = 1);

}  // namespace darbs
