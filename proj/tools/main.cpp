// Command-line front end: configuration parsing, scene/camera/image I/O and
// the experiment subcommands (calibrate, fit1d, gradcheck, render, fit-image,
// fit-scene). Every run writes a run-manifest echoing the fully resolved
// configuration next to its artifacts.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "darbs/calibration.hpp"
#include "darbs/errors.hpp"
#include "darbs/fit1d.hpp"
#include "darbs/fit2d.hpp"
#include "darbs/fit3d.hpp"
#include "darbs/image.hpp"
#include "darbs/kernel.hpp"
#include "darbs/psi_table.hpp"
#include "darbs/scene_io.hpp"

namespace fs = std::filesystem;
using namespace darbs;

namespace {

constexpr const char* kVersion = "0.1.0";

struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Fixed-notation decimal with enough digits to round-trip, '.' separator
// regardless of locale.
std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct Options {
    std::string subcommand;
    std::map<std::string, std::string> values;  // resolved key -> value
    std::vector<std::string> known_order;       // manifest ordering

    const std::string& get(const std::string& key) const { return values.at(key); }
    double get_num(const std::string& key) const {
        const std::string& s = values.at(key);
        try {
            std::size_t pos = 0;
            double v = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw usage_error("malformed value for --" + key + ": '" + s + "'");
        }
    }
    int get_int(const std::string& key) const {
        double v = get_num(key);
        if (v != double(long(v))) {
            throw usage_error("expected integer for --" + key + ": '" + values.at(key) + "'");
        }
        return int(v);
    }
};

// Per-subcommand keys with defaults; empty default means "required".
using KeyDefaults = std::vector<std::pair<std::string, std::string>>;

KeyDefaults schema_for(const std::string& sub) {
    KeyDefaults common = {
        {"kernel", "gaussian"}, {"beta", ""}, {"xi", ""}, {"lobes", ""},
        {"seed", "1"}, {"threads", "1"}, {"out", "out"},
    };
    KeyDefaults extra;
    if (sub == "calibrate") {
        extra = {{"trials", "64"}, {"grid", "96"}};
    } else if (sub == "fit1d") {
        extra = {{"target", "irregular"}, {"n", "10"}, {"iters", "5000"},
                 {"lr", "0.01"}, {"samples", "256"}};
    } else if (sub == "gradcheck") {
        extra = {{"samples", "1000"}, {"step", "1e-5"}};
    } else if (sub == "render") {
        extra = {{"scene", ""}, {"cameras", ""}, {"psi", "auto"}, {"dilation", "0.3"}};
    } else if (sub == "fit-image") {
        extra = {{"target", ""}, {"n", "300"}, {"iters", "2000"}, {"lambda", "0.2"}};
    } else if (sub == "fit-scene") {
        extra = {{"scene", ""}, {"cameras", ""}, {"psi", "auto"}, {"iters", "2000"},
                 {"lambda", "0.2"}, {"perturb", "0.05"}};
    } else {
        throw usage_error("unknown subcommand '" + sub + "'");
    }
    common.insert(common.end(), extra.begin(), extra.end());
    return common;
}

// beta/xi/lobes are optional overrides on the preset; every other empty
// default marks a required key.
bool is_required(const std::string& key) {
    return key != "beta" && key != "xi" && key != "lobes";
}

Options parse_config(int argc, char** argv) {
    Options opt;
    opt.subcommand = argv[1];
    KeyDefaults schema = schema_for(opt.subcommand);
    for (const auto& [k, v] : schema) {
        opt.values[k] = v;
        opt.known_order.push_back(k);
    }

    auto set_key = [&](const std::string& key, const std::string& value,
                       const std::string& where) {
        if (!opt.values.count(key)) {
            throw usage_error("unknown key '" + key + "' " + where);
        }
        opt.values[key] = value;
    };

    // First pass: locate a config file, apply it, then let flags override.
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> flag_pairs;
    for (int i = 2; i < argc; ++i) {
        std::string tok = argv[i];
        if (tok.rfind("--", 0) != 0) {
            throw usage_error("expected a --flag, got '" + tok + "'");
        }
        std::string key = tok.substr(2);
        if (i + 1 >= argc) {
            throw usage_error("missing value for '" + tok + "'");
        }
        std::string value = argv[++i];
        if (key == "config") {
            config_path = value;
        } else {
            flag_pairs.emplace_back(key, value);
        }
    }
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw io_error("cannot open config file " + config_path);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
            auto strip = [](std::string s) {
                auto b = s.find_first_not_of(" \t\r");
                auto e = s.find_last_not_of(" \t\r");
                return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
            };
            if (strip(line).empty()) continue;
            auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw usage_error(config_path + ":" + std::to_string(lineno) +
                                  ": expected 'key = value'");
            }
            set_key(strip(line.substr(0, eq)), strip(line.substr(eq + 1)),
                    "in " + config_path + ":" + std::to_string(lineno));
        }
    }
    for (const auto& [k, v] : flag_pairs) {
        set_key(k, v, "on the command line");
    }

    for (const auto& [k, v] : schema) {
        if (v.empty() && is_required(k) && opt.values[k].empty()) {
            throw usage_error("missing required flag --" + k);
        }
    }
    return opt;
}

KernelSpec resolve_kernel(const Options& opt) {
    auto preset = kernel_preset(opt.get("kernel"));
    if (!preset) {
        throw usage_error("unknown kernel '" + opt.get("kernel") + "'");
    }
    double beta = opt.get("beta").empty() ? preset->beta : opt.get_num("beta");
    double xi = opt.get("xi").empty() ? preset->xi : opt.get_num("xi");
    int lobes = opt.get("lobes").empty() ? preset->lobes : opt.get_int("lobes");
    return make_kernel(preset->family, beta, xi, lobes);
}

double resolve_psi(const Options& opt) {
    const std::string& s = opt.get("psi");
    if (s == "auto") {
        auto row = default_psi(opt.get("kernel"));
        if (!row) {
            throw usage_error("no default correction factor for kernel '" +
                              opt.get("kernel") + "'; pass --psi <value>");
        }
        return row->psi;
    }
    try {
        return std::stod(s);
    } catch (const std::exception&) {
        throw usage_error("malformed value for --psi: '" + s + "'");
    }
}

void write_manifest(const Options& opt, const fs::path& outdir) {
    std::ofstream out(outdir / "run-manifest");
    if (!out) throw io_error("cannot write run-manifest");
    out << "# fully resolved configuration; rerunning `darbs " << opt.subcommand
        << " --config run-manifest` reproduces this run\n";
    for (const auto& k : opt.known_order) {
        if (opt.values.at(k).empty()) continue;
        out << k << " = " << opt.values.at(k) << "\n";
    }
    if (!out) throw io_error("write failed for run-manifest");
}

FitConfig fit_config_from(const Options& opt) {
    FitConfig cfg;
    cfg.lambda = opt.get_num("lambda");
    cfg.iters = opt.get_int("iters");
    cfg.seed = std::uint64_t(opt.get_num("seed"));
    cfg.threads = opt.get_int("threads");
    return cfg;
}

void write_fit_report_csv(const FitReport& report, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path.string());
    out << "iter,loss,l1,dssim,psnr\n";
    for (std::size_t i = 0; i < report.loss_curve.size(); ++i) {
        out << i + 1 << ',' << fmt(report.loss_curve[i]) << ',' << fmt(report.l1_curve[i])
            << ',' << fmt(report.dssim_curve[i]) << ',' << fmt(report.psnr_curve[i]) << '\n';
    }
    if (!out) throw io_error("write failed for " + path.string());
}

int cmd_calibrate(const Options& opt, const fs::path& outdir) {
    KernelSpec kernel = resolve_kernel(opt);
    CalibrationConfig cfg;
    cfg.trials = opt.get_int("trials");
    cfg.grid_n = opt.get_int("grid");
    std::uint64_t seed = std::uint64_t(opt.get_num("seed"));
    int threads = opt.get_int("threads");

    PsiEstimate est = estimate_psi(kernel, cfg, seed, threads);
    {
        std::ofstream out(outdir / "report.csv");
        if (!out) throw io_error("cannot write report.csv");
        out << "kernel,beta,xi,lobes,psi,std,trials,grid_n\n";
        out << opt.get("kernel") << ',' << fmt(kernel.beta) << ',' << fmt(kernel.xi) << ','
            << kernel.lobes << ',' << fmt(est.psi) << ',' << fmt(est.std_dev) << ','
            << est.trials << ',' << cfg.grid_n << '\n';
    }
    std::cout << "psi(" << opt.get("kernel") << ") = " << fmt(est.psi) << " +- "
              << fmt(est.std_dev) << " (" << est.trials << " trials)\n";

    // When a published value exists and the estimate misses it, report the
    // sensitivity to the eigenvalue sampling range instead of failing
    // silently.
    auto row = default_psi(opt.get("kernel"));
    if (row && std::string(row->provenance) == "published" &&
        std::abs(est.psi - row->psi) > 0.05) {
        auto table = psi_sensitivity(kernel, cfg, seed, threads);
        std::ofstream out(outdir / "sensitivity.csv");
        if (!out) throw io_error("cannot write sensitivity.csv");
        out << "eig_min,eig_max,psi,std\n";
        for (const auto& r : table) {
            out << fmt(r.eig_min) << ',' << fmt(r.eig_max) << ',' << fmt(r.psi) << ','
                << fmt(r.std_dev) << '\n';
        }
        std::cout << "estimate misses the published value " << fmt(row->psi)
                  << "; wrote sensitivity.csv\n";
    }
    return 0;
}

int cmd_fit1d(const Options& opt, const fs::path& outdir) {
    KernelSpec kernel = resolve_kernel(opt);
    SignalKind kind;
    if (!signal_kind_from_name(opt.get("target"), kind)) {
        throw usage_error("unknown 1D target '" + opt.get("target") + "'");
    }
    std::uint64_t seed = std::uint64_t(opt.get_num("seed"));
    Signal1D target = gen_signal(kind, opt.get_int("samples"), seed);
    Fit1DConfig cfg;
    cfg.iters = opt.get_int("iters");
    cfg.lr = opt.get_num("lr");
    cfg.seed = seed;

    Fit1DReport report = fit_mixture(target, kernel, opt.get_int("n"), cfg);
    {
        std::ofstream out(outdir / "report.csv");
        if (!out) throw io_error("cannot write report.csv");
        out << "iter,loss\n";
        for (std::size_t i = 0; i < report.loss_curve.size(); ++i) {
            out << i + 1 << ',' << fmt(report.loss_curve[i]) << '\n';
        }
    }
    {
        std::ofstream out(outdir / "summary.csv");
        if (!out) throw io_error("cannot write summary.csv");
        out << "kernel,target,n,final_mse\n";
        out << opt.get("kernel") << ',' << opt.get("target") << ',' << report.n_components
            << ',' << fmt(report.final_mse) << '\n';
    }
    std::cout << "final mse = " << fmt(report.final_mse) << "\n";
    return 0;
}

int cmd_gradcheck(const Options& opt, const fs::path& outdir) {
    int samples = opt.get_int("samples");
    double step = opt.get_num("step");
    std::uint64_t seed = std::uint64_t(opt.get_num("seed"));
    const char* names[] = {"gaussian", "half-cosine-sq", "raised-cosine", "mod-sinc",
                           "inv-multiquadratic"};
    std::ofstream out(outdir / "report.csv");
    if (!out) throw io_error("cannot write report.csv");
    out << "kernel,max_rel_err\n";
    bool ok = true;
    for (const char* name : names) {
        KernelSpec k = *kernel_preset(name);
        double err = grad_check_kernel(k, samples, step, seed);
        out << name << ',' << fmt(err) << '\n';
        std::cout << name << ": max rel err " << fmt(err) << "\n";
        ok = ok && err < 1e-4;
    }
    if (!ok) {
        std::cerr << "error: numeric: kernel derivative check exceeded 1e-4\n";
        return 2;
    }
    return 0;
}

int cmd_render(const Options& opt, const fs::path& outdir) {
    KernelSpec kernel = resolve_kernel(opt);
    double psi = resolve_psi(opt);
    double dilation = opt.get_num("dilation");
    int threads = opt.get_int("threads");
    auto prims = read_scene(opt.get("scene"));
    auto cams = read_cameras(opt.get("cameras"));
    for (std::size_t i = 0; i < cams.size(); ++i) {
        ImageBuffer img =
            render_scene(prims, cams[i], kernel, psi, Vec3::Zero(), threads, dilation);
        char name[32];
        std::snprintf(name, sizeof(name), "view_%03zu", i);
        write_ppm(img, (outdir / (std::string(name) + ".ppm")).string());
        write_float_dump(img, (outdir / (std::string(name) + ".dsfl")).string());
    }
    std::cout << "rendered " << cams.size() << " view(s) of " << prims.size()
              << " primitives\n";
    return 0;
}

int cmd_fit_image(const Options& opt, const fs::path& outdir) {
    KernelSpec kernel = resolve_kernel(opt);
    ImageBuffer target = read_ppm(opt.get("target"));
    FitConfig cfg = fit_config_from(opt);

    Fit2DResult res = fit_image(target, kernel, opt.get_int("n"), cfg);
    write_fit_report_csv(res.report, outdir / "report.csv");
    write_ppm(res.rendered, (outdir / "rendered.ppm").string());
    write_float_dump(res.rendered, (outdir / "rendered.dsfl").string());
    {
        std::ofstream out(outdir / "summary.csv");
        if (!out) throw io_error("cannot write summary.csv");
        out << "kernel,n,final_mse,final_psnr,final_ssim\n";
        out << opt.get("kernel") << ',' << res.report.n << ',' << fmt(res.report.final_mse)
            << ',' << fmt(res.report.final_psnr) << ',' << fmt(res.report.final_ssim) << '\n';
    }
    std::cout << "final psnr = " << fmt(res.report.final_psnr) << " dB\n";
    return 0;
}

// Self-reconstruction experiment: the scene file is the ground truth, the
// targets are its renders from every camera, and optimization starts from a
// seeded perturbation of the truth.
int cmd_fit_scene(const Options& opt, const fs::path& outdir) {
    KernelSpec kernel = resolve_kernel(opt);
    double psi = resolve_psi(opt);
    FitConfig cfg = fit_config_from(opt);
    double perturb = opt.get_num("perturb");

    auto truth = read_scene(opt.get("scene"));
    auto cams = read_cameras(opt.get("cameras"));
    std::vector<View> views;
    for (const auto& cam : cams) {
        views.push_back(View{cam, render_scene(truth, cam, kernel, psi, Vec3::Zero(),
                                               cfg.threads)});
    }

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Primitive3D> init = truth;
    for (auto& p : init) {
        for (int a = 0; a < 3; ++a) p.mu[a] += perturb * normal(rng);
        for (int a = 0; a < 3; ++a) p.scale[a] *= std::exp(0.5 * perturb * normal(rng));
        p.rot = Eigen::Quaterniond(p.rot.w() + 0.5 * perturb * normal(rng),
                                   p.rot.x() + 0.5 * perturb * normal(rng),
                                   p.rot.y() + 0.5 * perturb * normal(rng),
                                   p.rot.z() + 0.5 * perturb * normal(rng));
        p.opacity = std::clamp(p.opacity + 0.5 * perturb * normal(rng), 0.02, 0.98);
        for (int c = 0; c < 3; ++c) {
            p.color[c] = std::clamp(p.color[c] + 0.5 * perturb * normal(rng), 0.02, 0.98);
        }
    }

    Fit3DResult res = fit_scene(views, kernel, psi, init, cfg);
    write_fit_report_csv(res.report, outdir / "report.csv");
    write_scene(res.primitives, (outdir / "fitted_scene.txt").string());
    {
        std::ofstream out(outdir / "summary.csv");
        if (!out) throw io_error("cannot write summary.csv");
        out << "kernel,psi,n,final_psnr,final_ssim";
        for (std::size_t i = 0; i < res.per_view_psnr.size(); ++i) {
            out << ",psnr_view" << i;
        }
        out << '\n';
        out << opt.get("kernel") << ',' << fmt(psi) << ',' << res.report.n << ','
            << fmt(res.report.final_psnr) << ',' << fmt(res.report.final_ssim);
        for (double v : res.per_view_psnr) out << ',' << fmt(v);
        out << '\n';
    }
    for (std::size_t i = 0; i < views.size(); ++i) {
        ImageBuffer img = render_scene(res.primitives, views[i].camera, kernel, psi,
                                       Vec3::Zero(), cfg.threads);
        char name[32];
        std::snprintf(name, sizeof(name), "view_%03zu", i);
        write_ppm(img, (outdir / (std::string(name) + ".ppm")).string());
        write_float_dump(img, (outdir / (std::string(name) + ".dsfl")).string());
    }
    std::cout << "final psnr = " << fmt(res.report.final_psnr) << " dB over "
              << views.size() << " views\n";
    return 0;
}

void print_version() {
    std::cout << "darbsplat " << kVersion << "\n";
    std::cout << "default correction factors:\n";
    for (const auto& row : kPsiDefaults) {
        std::cout << "  " << row.preset << " = " << fmt(row.psi) << " (" << row.provenance
                  << ")\n";
    }
}

void print_usage() {
    std::cout <<
        "usage: darbs <subcommand> [--config FILE] [--key value ...]\n"
        "subcommands:\n"
        "  calibrate   --kernel NAME [--trials T] [--grid N] [--seed S]\n"
        "  fit1d       --target KIND --kernel NAME [--n N] [--iters I] [--seed S]\n"
        "  gradcheck   [--samples N] [--step H]\n"
        "  render      --scene FILE --cameras FILE [--kernel NAME] [--psi V|auto]\n"
        "  fit-image   --target PPM [--kernel NAME] [--n N] [--iters I]\n"
        "  fit-scene   --scene FILE --cameras FILE [--psi V|auto] [--iters I]\n"
        "common flags: --out DIR, --threads N, --beta/--xi/--lobes overrides\n"
        "darbs --version prints the engine version and default psi table\n";
}

}  // namespace

int main(int argc, char** argv) {
    try {
        if (argc >= 2 && std::string(argv[1]) == "--version") {
            print_version();
            return 0;
        }
        if (argc < 2) {
            print_usage();
            return 1;
        }
        Options opt = parse_config(argc, argv);
        fs::path outdir = opt.get("out");
        std::error_code ec;
        fs::create_directories(outdir, ec);
        if (ec) throw io_error("cannot create output directory " + outdir.string());
        write_manifest(opt, outdir);

        if (opt.subcommand == "calibrate") return cmd_calibrate(opt, outdir);
        if (opt.subcommand == "fit1d") return cmd_fit1d(opt, outdir);
        if (opt.subcommand == "gradcheck") return cmd_gradcheck(opt, outdir);
        if (opt.subcommand == "render") return cmd_render(opt, outdir);
        if (opt.subcommand == "fit-image") return cmd_fit_image(opt, outdir);
        if (opt.subcommand == "fit-scene") return cmd_fit_scene(opt, outdir);
        throw usage_error("unknown subcommand '" + opt.subcommand + "'");
    } catch (const usage_error& e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        return 1;
    } catch (const invalid_parameter& e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        return 1;
    } catch (const io_error& e) {
        std::cerr << "error: io: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: numeric: " << e.what() << "\n";
        return 2;
    }
}
