#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "darbs/errors.hpp"

namespace darbs {

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;

    explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-15;

// One Adam update at step t (1-based) with per-parameter learning rates.
inline void adam_step(std::span<double> params, std::span<const double> grads,
                      AdamState& state, std::span<const double> lrs, int t) {
    if (params.size() != grads.size() || params.size() != state.m.size() ||
        params.size() != lrs.size()) {
        throw contract_violation("adam_step: shape mismatch");
    }
    double bc1 = 1.0 - std::pow(kAdamBeta1, t);
    double bc2 = 1.0 - std::pow(kAdamBeta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = kAdamBeta1 * state.m[i] + (1.0 - kAdamBeta1) * grads[i];
        state.v[i] = kAdamBeta2 * state.v[i] + (1.0 - kAdamBeta2) * grads[i] * grads[i];
        double mhat = state.m[i] / bc1;
        double vhat = state.v[i] / bc2;
        params[i] -= lrs[i] * mhat / (std::sqrt(vhat) + kAdamEps);
    }
}

inline void adam_step(std::span<double> params, std::span<const double> grads,
                      AdamState& state, double lr, int t) {
    std::vector<double> lrs(params.size(), lr);
    adam_step(params, grads, state, lrs, t);
}

}  // namespace darbs
