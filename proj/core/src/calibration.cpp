#include "darbs/calibration.hpp"

#include <cmath>
#include <random>

#include <Eigen/Cholesky>

#include "darbs/errors.hpp"
#include "darbs/parallel.hpp"

namespace darbs {

DensityGrid density_grid(const KernelSpec& spec, const Vec3& mu, const Covariance3& sigma,
                         int n, const Vec3& extent) {
    if (n < 32) {
        throw invalid_parameter("density_grid: n must be >= 32");
    }
    double t_max = std::sqrt(cutoff_dm2(spec));
    for (int axis = 0; axis < 3; ++axis) {
        // Half-width along a coordinate axis of the d_M = t ellipsoid.
        double needed = t_max * std::sqrt(sigma.m(axis, axis));
        if (!spec.unbounded && extent[axis] < needed) {
            throw invalid_parameter("density_grid: extent truncates the cutoff ellipsoid");
        }
    }
    Mat3 sigma_inv = sigma.m.llt().solve(Mat3::Identity());

    DensityGrid grid;
    grid.n = n;
    grid.extent = extent;
    grid.values.assign(std::size_t(n) * n * n, 0.0);
    for (int i = 0; i < n; ++i) {
        double x = grid.coord(0, i);
        for (int j = 0; j < n; ++j) {
            double y = grid.coord(1, j);
            for (int k = 0; k < n; ++k) {
                Vec3 d(x - mu.x(), y - mu.y(), grid.coord(2, k) - mu.z());
                double dm2 = d.dot(sigma_inv * d);
                if (!spec.unbounded && dm2 > spec.cutoff) continue;
                grid.at(i, j, k) = eval_analytic(spec, dm2);
            }
        }
    }
    return grid;
}

Density2D collapse_and_normalize(const DensityGrid& grid, Axis axis) {
    int n = grid.n;
    Density2D out;
    out.n = n;
    out.extent = grid.extent;
    int a = static_cast<int>(axis);
    out.axis_u = a == 0 ? 1 : 0;
    out.axis_v = a == 2 ? 1 : 2;
    out.values.assign(std::size_t(n) * n, 0.0);

    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double sum = 0.0;
            for (int k = 0; k < n; ++k) {
                int idx[3];
                idx[out.axis_u] = i;
                idx[out.axis_v] = j;
                idx[a] = k;
                sum += grid.at(idx[0], idx[1], idx[2]);
            }
            out.values[std::size_t(i) * n + j] = sum;
        }
    }
    double peak = *std::max_element(out.values.begin(), out.values.end());
    if (!(peak > 0.0)) {
        throw degenerate_density("collapse_and_normalize: all-zero grid");
    }
    for (double& v : out.values) v /= peak;
    return out;
}

WeightedCov weighted_covariance(const Density2D& density) {
    int n = density.n;
    double wsum = 0.0;
    Vec2 mean = Vec2::Zero();
    for (int i = 0; i < n; ++i) {
        double u = -density.extent[density.axis_u] +
                   2.0 * density.extent[density.axis_u] * i / (n - 1);
        for (int j = 0; j < n; ++j) {
            double v = -density.extent[density.axis_v] +
                       2.0 * density.extent[density.axis_v] * j / (n - 1);
            double w = density.values[std::size_t(i) * n + j];
            wsum += w;
            mean += w * Vec2(u, v);
        }
    }
    if (!(wsum > 0.0)) {
        throw degenerate_density("weighted_covariance: zero total weight");
    }
    mean /= wsum;
    Mat2 cov = Mat2::Zero();
    for (int i = 0; i < n; ++i) {
        double u = -density.extent[density.axis_u] +
                   2.0 * density.extent[density.axis_u] * i / (n - 1);
        for (int j = 0; j < n; ++j) {
            double v = -density.extent[density.axis_v] +
                       2.0 * density.extent[density.axis_v] * j / (n - 1);
            double w = density.values[std::size_t(i) * n + j];
            Vec2 d = Vec2(u, v) - mean;
            cov += w * d * d.transpose();
        }
    }
    cov /= wsum;
    return WeightedCov{mean, cov};
}

double fit_psi(const Mat2& measured, const Mat2& submatrix) {
    double denom = (submatrix.array() * submatrix.array()).sum();
    if (!(denom > 0.0)) {
        throw invalid_parameter("fit_psi: zero submatrix");
    }
    return (submatrix.array() * measured.array()).sum() / denom;
}

Covariance3 random_covariance(std::uint64_t seed, double eig_min, double eig_max) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> eig_dist(eig_min, eig_max);
    Vec3 eig(eig_dist(rng), eig_dist(rng), eig_dist(rng));
    // Uniform random rotation: four standard normals, normalized.
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::Quaterniond q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
    q.normalize();
    Mat3 r = q.toRotationMatrix();
    Covariance3 out;
    out.m = r * eig.asDiagonal() * r.transpose();
    out.m = 0.5 * (out.m + out.m.transpose());
    return out;
}

PsiEstimate estimate_psi(const KernelSpec& spec, const CalibrationConfig& config,
                         std::uint64_t seed, int threads) {
    if (config.trials < 10) {
        throw invalid_parameter("estimate_psi: trials must be >= 10");
    }
    double t_max = std::sqrt(cutoff_dm2(spec));
    std::vector<double> psis(config.trials, std::numeric_limits<double>::quiet_NaN());

    parallel_for(config.trials, threads, [&](std::size_t trial) {
        Covariance3 sigma = random_covariance(seed + trial, config.eig_min, config.eig_max);
        Vec3 extent;
        for (int axis = 0; axis < 3; ++axis) {
            extent[axis] = config.extent_margin * t_max * std::sqrt(sigma.m(axis, axis));
        }
        try {
            DensityGrid grid = density_grid(spec, Vec3::Zero(), sigma, config.grid_n, extent);
            Density2D plane = collapse_and_normalize(grid, Axis::Z);
            WeightedCov wc = weighted_covariance(plane);
            psis[trial] = fit_psi(wc.cov, sigma.m.topLeftCorner<2, 2>());
        } catch (const numeric_error&) {
            // leave NaN; counted as an aborted trial
        }
    });

    PsiEstimate est;
    est.kernel = spec;
    est.config = config;
    double sum = 0.0, sum2 = 0.0;
    int ok = 0;
    for (double p : psis) {
        if (std::isnan(p)) {
            ++est.aborted;
        } else {
            sum += p;
            sum2 += p * p;
            ++ok;
        }
    }
    if (est.aborted * 10 > config.trials) {
        throw calibration_failure("estimate_psi: more than 10% of trials aborted");
    }
    est.trials = ok;
    est.psi = sum / ok;
    est.std_dev = std::sqrt(std::max(0.0, sum2 / ok - est.psi * est.psi));
    return est;
}

std::vector<PsiSensitivityRow> psi_sensitivity(const KernelSpec& spec,
                                               const CalibrationConfig& config,
                                               std::uint64_t seed, int threads) {
    static constexpr double kRanges[][2] = {
        {0.25, 1.0}, {0.5, 2.0}, {1.0, 4.0}, {0.5, 8.0}, {2.0, 8.0},
    };
    std::vector<PsiSensitivityRow> rows;
    for (auto& r : kRanges) {
        CalibrationConfig c = config;
        c.eig_min = r[0];
        c.eig_max = r[1];
        PsiEstimate e = estimate_psi(spec, c, seed, threads);
        rows.push_back(PsiSensitivityRow{r[0], r[1], e.psi, e.std_dev});
    }
    return rows;
}

}  // namespace darbs
