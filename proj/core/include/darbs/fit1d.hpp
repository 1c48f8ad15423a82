#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "darbs/kernel.hpp"

namespace darbs {

struct Signal1D {
    std::vector<double> grid;    // uniform, strictly increasing
    std::vector<double> values;
};

enum class SignalKind {
    Square,
    Triangle,
    Gaussian,
    HalfSinusoid,
    SharpExponential,
    Parabolic,
    Trapezoid,
    Irregular,
};

struct MixtureComponent {
    double position = 0.0;
    double sigma = 1.0;  // > 0
    double amplitude = 0.0;
};

struct Mixture1D {
    std::vector<MixtureComponent> components;
    KernelSpec kernel;
};

struct Fit1DConfig {
    int iters = 5000;
    double lr = 0.01;
    std::uint64_t seed = 0;
};

struct Fit1DReport {
    std::vector<double> loss_curve;
    double final_mse = 0.0;
    double wall_time = 0.0;
    KernelSpec kernel;
    int n_components = 0;
    Mixture1D mixture;
};

// Unit-amplitude pulse on [-5, 5] centered at the grid midpoint; `Irregular`
// is a seeded sum of 3 random-width raised-cosine pulses.
Signal1D gen_signal(SignalKind kind, int samples, std::uint64_t seed);

std::vector<double> mixture_eval(const Mixture1D& mix, const std::vector<double>& grid);

// Full-batch Adam on (position, log sigma, amplitude) of N components against
// a mean squared error loss.
Fit1DReport fit_mixture(const Signal1D& target, const KernelSpec& kernel, int n,
                        const Fit1DConfig& config);

struct SweepResult {
    int best_n = 0;
    Fit1DReport best;
    std::vector<std::pair<int, double>> all;  // (N, final MSE)
};

SweepResult sweep_components(const Signal1D& target, const KernelSpec& kernel,
                             const std::vector<int>& n_list, const Fit1DConfig& config);

bool signal_kind_from_name(const std::string& name, SignalKind& out);

}  // namespace darbs
