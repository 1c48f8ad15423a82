#include <cmath>
#include <numbers>
#include <random>

#include "darbs/errors.hpp"
#include "darbs/kernel.hpp"
#include "doctest.h"

using namespace darbs;

namespace {
constexpr double kPi = std::numbers::pi;

const char* kPresetNames[] = {"gaussian", "half-cosine-sq", "raised-cosine", "mod-sinc",
                              "inv-multiquadratic"};
}  // namespace

TEST_CASE("make_kernel validates parameters") {
    CHECK_THROWS_AS(make_kernel(KernelFamily::Gaussian, 0.0, 1.0), invalid_parameter);
    CHECK_THROWS_AS(make_kernel(KernelFamily::Gaussian, -1.0, 1.0), invalid_parameter);
    CHECK_THROWS_AS(make_kernel(KernelFamily::Gaussian, 2.0, 0.0), invalid_parameter);
    CHECK_THROWS_AS(make_kernel(KernelFamily::Gaussian, 2.0, -3.0), invalid_parameter);
    CHECK_THROWS_AS(make_kernel(KernelFamily::HalfCosine, 2.0, 1.0, 0), invalid_parameter);
}

TEST_CASE("squared-distance cutoffs per family") {
    CHECK(cutoff_dm2(make_kernel(KernelFamily::HalfCosine, 2.0, 18.0 / kPi)) ==
          doctest::Approx(9.0).epsilon(1e-12));
    CHECK(cutoff_dm2(make_kernel(KernelFamily::RaisedCosine, 1.0, 2.5 / kPi)) ==
          doctest::Approx(6.25).epsilon(1e-12));
    CHECK(cutoff_dm2(make_kernel(KernelFamily::ModulusSinc, 1.0, 3.0 / kPi)) ==
          doctest::Approx(9.0).epsilon(1e-12));
    // Infinite-support families use the fixed render bound d_M <= 3.
    KernelSpec g = make_kernel(KernelFamily::Gaussian, 2.0, 1.0);
    CHECK(g.unbounded);
    CHECK(cutoff_dm2(g) == doctest::Approx(9.0));
    CHECK(make_kernel(KernelFamily::InverseMultiquadratic, 2.0, 1.0).unbounded);
}

TEST_CASE("eval reference values") {
    KernelSpec hc = make_kernel(KernelFamily::HalfCosine, 2.0, 18.0 / kPi);
    CHECK(eval(hc, 0.0).weight == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(eval(hc, 9.0).weight == doctest::Approx(0.0).epsilon(1e-12));

    KernelSpec g1 = make_kernel(KernelFamily::Gaussian, 2.0, 1.0);
    CHECK(eval(g1, 1.0).weight == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));

    KernelSpec ms = make_kernel(KernelFamily::ModulusSinc, 1.0, 3.0 / kPi);
    CHECK(eval(ms, 0.0).weight == doctest::Approx(1.0).epsilon(1e-12));

    KernelSpec rc = make_kernel(KernelFamily::RaisedCosine, 1.0, 2.5 / kPi);
    CHECK(eval(rc, 0.0).weight == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(eval(rc, 6.25).weight == doctest::Approx(0.0).epsilon(1e-12));

    KernelSpec iq = make_kernel(KernelFamily::InverseMultiquadratic, 2.0, 1.0);
    CHECK(eval(iq, 3.0).weight == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("gaussian with xi=1 equals exp(-dm2) to machine precision") {
    KernelSpec g = make_kernel(KernelFamily::Gaussian, 2.0, 1.0);
    for (double dm2 : {0.0, 0.3, 1.0, 2.5, 8.9}) {
        CHECK(eval(g, dm2).weight == std::exp(-dm2));
    }
}

TEST_CASE("eval rejects invalid dm2") {
    KernelSpec g = make_kernel(KernelFamily::Gaussian, 2.0, 2.0);
    CHECK_THROWS_AS(eval(g, -0.1), invalid_parameter);
    CHECK_THROWS_AS(eval(g, std::nan("")), invalid_parameter);
    CHECK_THROWS_AS(eval(g, std::numeric_limits<double>::infinity()), invalid_parameter);
}

TEST_CASE("weight stays in [0,1] and equals 1 at the center") {
    std::mt19937_64 rng(11);
    for (const char* name : kPresetNames) {
        KernelSpec k = *kernel_preset(name);
        CAPTURE(name);
        CHECK(eval(k, 0.0).weight == doctest::Approx(1.0).epsilon(1e-12));
        std::uniform_real_distribution<double> dist(0.0, k.cutoff * 1.5);
        for (int i = 0; i < 2000; ++i) {
            KernelSample s = eval(k, dist(rng));
            CHECK(s.weight >= 0.0);
            CHECK(s.weight <= 1.0);
            if (s.dm2 > k.cutoff) CHECK(s.weight == 0.0);
        }
    }
}

TEST_CASE("single-lobe weights decay monotonically") {
    for (const char* name : kPresetNames) {
        KernelSpec k = *kernel_preset(name);
        CAPTURE(name);
        double prev = eval(k, 0.0).weight;
        for (int i = 1; i <= 400; ++i) {
            double dm2 = k.cutoff * i / 400.0;
            double w = eval(k, dm2).weight;
            CHECK(w <= prev + 1e-12);
            prev = w;
        }
    }
}

TEST_CASE("cosine-family weight hits exactly zero at the cutoff") {
    KernelSpec hc = make_kernel(KernelFamily::HalfCosine, 2.0, 18.0 / kPi);
    KernelSpec rc = make_kernel(KernelFamily::RaisedCosine, 1.0, 2.5 / kPi);
    CHECK(std::abs(eval(hc, cutoff_dm2(hc)).weight) < 1e-12);
    CHECK(std::abs(eval(rc, cutoff_dm2(rc)).weight) < 1e-12);
}

TEST_CASE("analytic derivatives match finite differences") {
    for (const char* name : kPresetNames) {
        KernelSpec k = *kernel_preset(name);
        CAPTURE(name);
        CHECK(grad_check_kernel(k, 1000, 1e-5) < 1e-4);
    }
}

TEST_CASE("the derivative checker flags a wrong derivative") {
    // Re-run the checker's arithmetic with the analytic derivative zeroed
    // out: the reported relative error must be ~1, not a silent pass.
    KernelSpec k = *kernel_preset("gaussian");
    double step = 1e-5;
    double dm2 = 1.7;
    double fd = (eval(k, dm2 + step).weight - eval(k, dm2 - step).weight) / (2.0 * step);
    double fake_analytic = 0.0;
    double rel = std::abs(fake_analytic - fd) / std::max(std::abs(fd), 1e-8);
    CHECK(rel == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("extent-matched xi values") {
    CHECK(derive_xi(KernelFamily::HalfCosine, 2.0) == doctest::Approx(18.0 / kPi));
    CHECK(derive_xi(KernelFamily::RaisedCosine, 1.0) == doctest::Approx(3.0 / kPi));
    CHECK(derive_xi(KernelFamily::ModulusSinc, 1.0) == doctest::Approx(3.0 / kPi));
    CHECK_THROWS_AS(derive_xi(KernelFamily::InverseMultiquadratic, 2.0), invalid_parameter);
    // Verify the fixed point: plugging the derived xi back in gives support 3.
    for (KernelFamily f : {KernelFamily::HalfCosine, KernelFamily::RaisedCosine,
                           KernelFamily::ModulusSinc}) {
        double beta = f == KernelFamily::HalfCosine ? 2.0 : 1.0;
        KernelSpec k = make_kernel(f, beta, derive_xi(f, beta));
        CHECK(std::sqrt(cutoff_dm2(k)) == doctest::Approx(3.0).epsilon(1e-12));
    }
}

TEST_CASE("presets resolve by name; the experimental raised-cosine xi is kept") {
    for (const char* name : kPresetNames) {
        CHECK(kernel_preset(name).has_value());
    }
    CHECK_FALSE(kernel_preset("bogus").has_value());
    CHECK(kernel_preset("raised-cosine")->xi == doctest::Approx(2.5 / kPi));
    CHECK(kernel_preset("half-cosine-sq")->xi == doctest::Approx(18.0 / kPi));
}

TEST_CASE("multi-lobe kernels extend the domain") {
    KernelSpec rc1 = make_kernel(KernelFamily::RaisedCosine, 1.0, 2.5 / kPi, 1);
    KernelSpec rc2 = make_kernel(KernelFamily::RaisedCosine, 1.0, 2.5 / kPi, 2);
    CHECK(cutoff_dm2(rc2) == doctest::Approx(4.0 * cutoff_dm2(rc1)));
    // Past the first lobe the raised cosine rises again but stays in [0,1].
    double w = eval(rc2, cutoff_dm2(rc1) * 1.5).weight;
    CHECK(w > 0.0);
    CHECK(w <= 1.0);
}
