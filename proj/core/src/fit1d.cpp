#include "darbs/fit1d.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include "darbs/errors.hpp"
#include "darbs/optim.hpp"

namespace darbs {

namespace {

double pulse_value(SignalKind kind, double x) {
    double ax = std::abs(x);
    switch (kind) {
        case SignalKind::Square:
            return ax <= 1.5 ? 1.0 : 0.0;
        case SignalKind::Triangle:
            return std::max(0.0, 1.0 - ax / 2.0);
        case SignalKind::Gaussian:
            return std::exp(-0.5 * x * x);
        case SignalKind::HalfSinusoid:
            return ax <= 2.0 ? std::cos(std::numbers::pi * x / 4.0) : 0.0;
        case SignalKind::SharpExponential:
            return std::exp(-2.0 * ax);
        case SignalKind::Parabolic:
            return std::max(0.0, 1.0 - 0.25 * x * x);
        case SignalKind::Trapezoid:
            return std::clamp((3.0 - ax) / 2.0, 0.0, 1.0);
        default:
            return 0.0;
    }
}

// Raised-cosine (Hann) bump of half-width w around c.
double hann_pulse(double x, double c, double w, double amp) {
    double d = std::abs(x - c);
    if (d >= w) return 0.0;
    return amp * (0.5 + 0.5 * std::cos(std::numbers::pi * d / w));
}

}  // namespace

Signal1D gen_signal(SignalKind kind, int samples, std::uint64_t seed) {
    if (samples < 64) {
        throw invalid_parameter("gen_signal: samples must be >= 64");
    }
    Signal1D sig;
    sig.grid.resize(samples);
    sig.values.resize(samples);
    for (int i = 0; i < samples; ++i) {
        sig.grid[i] = -5.0 + 10.0 * i / (samples - 1);
    }
    if (kind == SignalKind::Irregular) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> center(-3.0, 3.0);
        std::uniform_real_distribution<double> width(0.5, 2.0);
        std::uniform_real_distribution<double> amp(0.5, 1.0);
        struct Pulse { double c, w, a; };
        Pulse pulses[3];
        for (auto& p : pulses) p = {center(rng), width(rng), amp(rng)};
        for (int i = 0; i < samples; ++i) {
            double v = 0.0;
            for (const auto& p : pulses) v += hann_pulse(sig.grid[i], p.c, p.w, p.a);
            sig.values[i] = v;
        }
    } else {
        for (int i = 0; i < samples; ++i) {
            sig.values[i] = pulse_value(kind, sig.grid[i]);
        }
    }
    return sig;
}

std::vector<double> mixture_eval(const Mixture1D& mix, const std::vector<double>& grid) {
    std::vector<double> out(grid.size(), 0.0);
    for (const auto& comp : mix.components) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            double u = (grid[i] - comp.position) / comp.sigma;
            out[i] += comp.amplitude * eval(mix.kernel, u * u).weight;
        }
    }
    return out;
}

Fit1DReport fit_mixture(const Signal1D& target, const KernelSpec& kernel, int n,
                        const Fit1DConfig& config) {
    if (n < 1) {
        throw invalid_parameter("fit_mixture: n must be >= 1");
    }
    auto t0 = std::chrono::steady_clock::now();
    const int m = static_cast<int>(target.grid.size());

    // Support of the target: where it exceeds 1% of its peak.
    double peak = *std::max_element(target.values.begin(), target.values.end());
    double lo = target.grid.front(), hi = target.grid.back();
    if (peak > 0.0) {
        for (int i = 0; i < m; ++i) {
            if (target.values[i] > 0.01 * peak) { lo = target.grid[i]; break; }
        }
        for (int i = m - 1; i >= 0; --i) {
            if (target.values[i] > 0.01 * peak) { hi = target.grid[i]; break; }
        }
    }
    double support = std::max(hi - lo, 1e-3);

    // Parameters: [position, log sigma, amplitude] per component.
    std::vector<double> params(3 * n);
    for (int i = 0; i < n; ++i) {
        params[3 * i] = lo + support * (i + 0.5) / n;
        params[3 * i + 1] = std::log(support / (2.0 * n));
        params[3 * i + 2] = (peak > 0.0 ? peak : 1.0) / n;
    }
    AdamState state(params.size());

    Fit1DReport report;
    report.kernel = kernel;
    report.n_components = n;
    report.loss_curve.reserve(config.iters);

    std::vector<double> pred(m), grads(params.size());
    for (int it = 1; it <= config.iters; ++it) {
        std::fill(pred.begin(), pred.end(), 0.0);
        std::fill(grads.begin(), grads.end(), 0.0);
        for (int i = 0; i < n; ++i) {
            double pos = params[3 * i];
            double sigma = std::exp(params[3 * i + 1]);
            double amp = params[3 * i + 2];
            for (int s = 0; s < m; ++s) {
                double u = (target.grid[s] - pos) / sigma;
                pred[s] += amp * eval(kernel, u * u).weight;
            }
        }
        double mse = 0.0;
        for (int s = 0; s < m; ++s) {
            double r = pred[s] - target.values[s];
            mse += r * r;
        }
        mse /= m;
        if (!std::isfinite(mse)) {
            throw numeric_error("fit_mixture: loss diverged at iteration " + std::to_string(it));
        }
        report.loss_curve.push_back(mse);

        for (int i = 0; i < n; ++i) {
            double pos = params[3 * i];
            double sigma = std::exp(params[3 * i + 1]);
            double amp = params[3 * i + 2];
            double gp = 0.0, gs = 0.0, ga = 0.0;
            for (int s = 0; s < m; ++s) {
                double dr = 2.0 * (pred[s] - target.values[s]) / m;
                double dx = target.grid[s] - pos;
                double dm2 = (dx / sigma) * (dx / sigma);
                KernelSample ks = eval(kernel, dm2);
                ga += dr * ks.weight;
                double d_dm2 = dr * amp * ks.dweight_ddm2;
                gp += d_dm2 * (-2.0 * dx / (sigma * sigma));
                gs += d_dm2 * (-2.0 * dm2);  // sigma = exp(log sigma)
            }
            grads[3 * i] = gp;
            grads[3 * i + 1] = gs;
            grads[3 * i + 2] = ga;
        }
        adam_step(params, grads, state, config.lr, it);
    }

    report.mixture.kernel = kernel;
    for (int i = 0; i < n; ++i) {
        report.mixture.components.push_back(MixtureComponent{
            params[3 * i], std::exp(params[3 * i + 1]), params[3 * i + 2]});
    }
    std::vector<double> final_pred = mixture_eval(report.mixture, target.grid);
    double mse = 0.0;
    for (int s = 0; s < m; ++s) {
        double r = final_pred[s] - target.values[s];
        mse += r * r;
    }
    report.final_mse = mse / m;
    report.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

SweepResult sweep_components(const Signal1D& target, const KernelSpec& kernel,
                             const std::vector<int>& n_list, const Fit1DConfig& config) {
    if (n_list.empty()) {
        throw invalid_parameter("sweep_components: empty N list");
    }
    SweepResult res;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        Fit1DConfig c = config;
        c.seed = config.seed + i;
        Fit1DReport r = fit_mixture(target, kernel, n_list[i], c);
        res.all.emplace_back(n_list[i], r.final_mse);
        if (r.final_mse < best) {
            best = r.final_mse;
            res.best_n = n_list[i];
            res.best = std::move(r);
        }
    }
    return res;
}

bool signal_kind_from_name(const std::string& name, SignalKind& out) {
    if (name == "square") out = SignalKind::Square;
    else if (name == "triangle") out = SignalKind::Triangle;
    else if (name == "gaussian") out = SignalKind::Gaussian;
    else if (name == "half_sinusoid") out = SignalKind::HalfSinusoid;
    else if (name == "sharp_exponential") out = SignalKind::SharpExponential;
    else if (name == "parabolic") out = SignalKind::Parabolic;
    else if (name == "trapezoid") out = SignalKind::Trapezoid;
    else if (name == "irregular") out = SignalKind::Irregular;
    else return false;
    return true;
}

}  // namespace darbs
