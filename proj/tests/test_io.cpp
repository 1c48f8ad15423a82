#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>

#include "darbs/errors.hpp"
#include "darbs/image.hpp"
#include "darbs/scene_io.hpp"
#include "doctest.h"

using namespace darbs;

namespace {

std::string temp_path(const char* stem) {
    return std::string("io_test_") + stem;
}

struct FileGuard {
    std::string path;
    explicit FileGuard(std::string p) : path(std::move(p)) {}
    ~FileGuard() { std::remove(path.c_str()); }
};

ImageBuffer random_image(int w, int h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ImageBuffer img(w, h);
    for (double& v : img.rgb) v = u(rng);
    return img;
}

}  // namespace

TEST_CASE("ppm round-trip is exact up to 8-bit quantization") {
    ImageBuffer img = random_image(13, 7, 1);
    FileGuard f(temp_path("rt.ppm"));
    write_ppm(img, f.path);
    ImageBuffer back = read_ppm(f.path);
    REQUIRE(back.width == img.width);
    REQUIRE(back.height == img.height);
    for (std::size_t i = 0; i < img.rgb.size(); ++i) {
        CHECK(std::abs(back.rgb[i] - img.rgb[i]) <= 0.5 / 255.0 + 1e-12);
    }
    // Quantized values are fixed points of a second round-trip.
    write_ppm(back, f.path);
    ImageBuffer again = read_ppm(f.path);
    CHECK(again.rgb == back.rgb);
}

TEST_CASE("float dump round-trips bit-exactly at single precision") {
    ImageBuffer img = random_image(9, 11, 2);
    // Include out-of-range values: the dump does not clamp.
    img.rgb[0] = -0.25;
    img.rgb[1] = 1.75;
    FileGuard f(temp_path("rt.dsfl"));
    write_float_dump(img, f.path);
    ImageBuffer back = read_float_dump(f.path);
    REQUIRE(back.width == img.width);
    REQUIRE(back.height == img.height);
    for (std::size_t i = 0; i < img.rgb.size(); ++i) {
        CHECK(back.rgb[i] == static_cast<double>(static_cast<float>(img.rgb[i])));
    }
}

TEST_CASE("image readers reject missing and malformed files") {
    CHECK_THROWS_AS(read_ppm("no_such_file.ppm"), io_error);
    CHECK_THROWS_AS(read_float_dump("no_such_file.dsfl"), io_error);

    FileGuard f(temp_path("bad.ppm"));
    {
        std::ofstream os(f.path, std::ios::binary);
        os << "P5\n4 4\n255\n";
    }
    CHECK_THROWS_AS(read_ppm(f.path), io_error);

    FileGuard g(temp_path("trunc.ppm"));
    {
        std::ofstream os(g.path, std::ios::binary);
        os << "P6\n4 4\n255\nab";  // far fewer than 48 payload bytes
    }
    CHECK_THROWS_AS(read_ppm(g.path), io_error);

    FileGuard d(temp_path("bad.dsfl"));
    {
        std::ofstream os(d.path, std::ios::binary);
        os << "NOPE";
    }
    CHECK_THROWS_AS(read_float_dump(d.path), io_error);
}

TEST_CASE("scene files round-trip to full double precision") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Primitive3D> prims;
    for (int i = 0; i < 8; ++i) {
        Primitive3D p;
        p.mu = Vec3(u(rng), u(rng), u(rng));
        p.scale = Vec3(0.1 + std::abs(u(rng)), 0.1 + std::abs(u(rng)),
                       0.1 + std::abs(u(rng)));
        p.rot = Eigen::Quaterniond(1.0 + u(rng), u(rng), u(rng), u(rng)).normalized();
        p.opacity = 0.5 + 0.4 * u(rng);
        p.color = Vec3(0.5 + 0.4 * u(rng), 0.5 + 0.4 * u(rng), 0.5 + 0.4 * u(rng));
        prims.push_back(p);
    }
    FileGuard f(temp_path("scene.txt"));
    write_scene(prims, f.path);
    std::vector<Primitive3D> back = read_scene(f.path);
    REQUIRE(back.size() == prims.size());
    for (std::size_t i = 0; i < prims.size(); ++i) {
        CHECK(back[i].mu == prims[i].mu);
        CHECK(back[i].scale == prims[i].scale);
        CHECK(back[i].rot.coeffs() == prims[i].rot.coeffs());
        CHECK(back[i].opacity == prims[i].opacity);
        CHECK(back[i].color == prims[i].color);
    }
}

TEST_CASE("scene reader skips comments and validates fields") {
    FileGuard f(temp_path("scene2.txt"));
    {
        std::ofstream os(f.path);
        os << "# comment line\n\n"
           << "0 0 0  0.1 0.1 0.1  1 0 0 0  0.5  0.2 0.3 0.4  # trailing note\n";
    }
    std::vector<Primitive3D> prims = read_scene(f.path);
    REQUIRE(prims.size() == 1);
    CHECK(prims[0].opacity == 0.5);

    {
        std::ofstream os(f.path);
        os << "0 0 0  -0.1 0.1 0.1  1 0 0 0  0.5  0.2 0.3 0.4\n";  // negative scale
    }
    CHECK_THROWS_AS(read_scene(f.path), io_error);

    {
        std::ofstream os(f.path);
        os << "0 0 0  0.1 0.1 0.1  1 0 0 0  1.5  0.2 0.3 0.4\n";  // opacity > 1
    }
    CHECK_THROWS_AS(read_scene(f.path), io_error);

    {
        std::ofstream os(f.path);
        os << "0 0 0  0.1 0.1\n";  // truncated record
    }
    CHECK_THROWS_AS(read_scene(f.path), io_error);

    CHECK_THROWS_AS(read_scene("no_such_scene.txt"), io_error);
}

TEST_CASE("camera files round-trip to full double precision") {
    std::vector<Camera> cams;
    for (int i = 0; i < 3; ++i) {
        Camera c;
        c.fx = 80 + i;
        c.fy = 81 + i;
        c.cx = 32.5;
        c.cy = 31.5;
        c.width = 64;
        c.height = 48;
        c.w.topLeftCorner<3, 3>() =
            Eigen::AngleAxisd(0.3 * i, Vec3(1, 2, 3).normalized()).toRotationMatrix();
        c.w.topRightCorner<3, 1>() = Vec3(0.1 * i, -0.2, 3.0);
        cams.push_back(c);
    }
    FileGuard f(temp_path("cams.txt"));
    write_cameras(cams, f.path);
    std::vector<Camera> back = read_cameras(f.path);
    REQUIRE(back.size() == cams.size());
    for (std::size_t i = 0; i < cams.size(); ++i) {
        CHECK(back[i].fx == cams[i].fx);
        CHECK(back[i].fy == cams[i].fy);
        CHECK(back[i].cx == cams[i].cx);
        CHECK(back[i].cy == cams[i].cy);
        CHECK(back[i].width == cams[i].width);
        CHECK(back[i].height == cams[i].height);
        CHECK(back[i].w == cams[i].w);
    }

    {
        std::ofstream os(f.path);
        os << "80 80 32 32 64\n";  // truncated block
    }
    CHECK_THROWS_AS(read_cameras(f.path), io_error);
    CHECK_THROWS_AS(read_cameras("no_such_cams.txt"), io_error);
}
