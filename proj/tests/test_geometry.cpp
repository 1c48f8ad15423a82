#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "darbs/errors.hpp"
#include "darbs/geometry.hpp"
#include "doctest.h"

using namespace darbs;

namespace {

Camera identity_camera(double fx = 100.0, double fy = 100.0, double cx = 50.0,
                       double cy = 50.0) {
    Camera cam;
    cam.fx = fx;
    cam.fy = fy;
    cam.cx = cx;
    cam.cy = cy;
    cam.width = 100;
    cam.height = 100;
    return cam;
}

Eigen::Quaterniond random_quat(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    return q;
}

Camera random_camera(std::mt19937_64& rng) {
    Camera cam = identity_camera();
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    Eigen::Quaterniond q = random_quat(rng);
    cam.w.topLeftCorner<3, 3>() = q.toRotationMatrix();
    cam.w.topRightCorner<3, 1>() = Vec3(u(rng), u(rng), 4.0 + u(rng));
    return cam;
}

Primitive3D random_primitive(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    std::uniform_real_distribution<double> us(0.2, 0.9);
    Primitive3D p;
    p.mu = Vec3(u(rng), u(rng), u(rng));
    p.scale = Vec3(us(rng), us(rng), us(rng));
    p.rot = random_quat(rng);
    p.opacity = 0.7;
    return p;
}

}  // namespace

TEST_CASE("covariance from scale and rotation") {
    Covariance3 c = covariance_from_scale_rot(Vec3(1, 1, 1), Eigen::Quaterniond::Identity());
    CHECK((c.m - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-15);

    c = covariance_from_scale_rot(Vec3(2, 1, 1), Eigen::Quaterniond::Identity());
    CHECK(c.m(0, 0) == doctest::Approx(4.0));
    CHECK(c.m(1, 1) == doctest::Approx(1.0));
    CHECK(c.m(2, 2) == doctest::Approx(1.0));

    // Quarter turn about z swaps the x/y axes.
    Eigen::Quaterniond qz(Eigen::AngleAxisd(std::numbers::pi / 2, Vec3::UnitZ()));
    c = covariance_from_scale_rot(Vec3(2, 1, 1), qz);
    Mat3 expect = Vec3(1, 4, 1).asDiagonal();
    CHECK((c.m - expect).cwiseAbs().maxCoeff() < 1e-12);

    CHECK_THROWS_AS(covariance_from_scale_rot(Vec3(0, 1, 1), Eigen::Quaterniond::Identity()),
                    invalid_parameter);
}

TEST_CASE("perspective point projection") {
    Camera cam = identity_camera();
    auto r = project_point(cam, Vec3(0, 0, 1));
    REQUIRE(r.has_value());
    CHECK(r->first.x() == doctest::Approx(50.0));
    CHECK(r->first.y() == doctest::Approx(50.0));
    CHECK(r->second == doctest::Approx(1.0));

    r = project_point(cam, Vec3(0.1, 0, 1));
    REQUIRE(r.has_value());
    CHECK(r->first.x() == doctest::Approx(60.0));

    CHECK_FALSE(project_point(cam, Vec3(0, 0, -1)).has_value());
    CHECK_FALSE(project_point(cam, Vec3(0, 0, 0.005)).has_value());
}

TEST_CASE("affine projection jacobian") {
    Camera cam = identity_camera(1, 1, 0, 0);
    auto j = ewa_jacobian(cam, Vec3(0, 0, 1));
    CHECK(j(0, 0) == doctest::Approx(1.0));
    CHECK(j(0, 2) == doctest::Approx(0.0));
    CHECK(j(1, 1) == doctest::Approx(1.0));

    j = ewa_jacobian(cam, Vec3(1, 0, 1));
    CHECK(j(0, 2) == doctest::Approx(-1.0));
    CHECK(j(1, 2) == doctest::Approx(0.0));

    Camera cam2 = identity_camera(2, 3, 0, 0);
    j = ewa_jacobian(cam2, Vec3(0, 0, 2));
    CHECK(j(0, 0) == doctest::Approx(1.0));
    CHECK(j(1, 1) == doctest::Approx(1.5));
}

TEST_CASE("covariance projection slices through the 2x3 jacobian") {
    Camera cam = identity_camera(1, 1, 0, 0);
    Covariance3 eye;
    Mat2 out = project_covariance(eye, cam, Vec3(0, 0, 1));
    CHECK((out - Mat2::Identity()).cwiseAbs().maxCoeff() < 1e-14);

    Covariance3 d;
    d.m = Vec3(4, 1, 9).asDiagonal();
    out = project_covariance(d, cam, Vec3(0, 0, 1));
    CHECK(out(0, 0) == doctest::Approx(4.0));
    CHECK(out(1, 1) == doctest::Approx(1.0));
    CHECK(out(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("covariance projection matches a naive dense-product oracle") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        Primitive3D p = random_primitive(rng);
        Covariance3 sigma = covariance_from_scale_rot(p.scale, p.rot);
        Camera cam = random_camera(rng);
        Vec3 t = cam.rotation() * p.mu + cam.translation();
        if (t.z() < 0.5) continue;

        Mat2 fast = project_covariance(sigma, cam, t);

        // Independent element-by-element triple product.
        double j[2][3] = {{cam.fx / t.z(), 0.0, -cam.fx * t.x() / (t.z() * t.z())},
                          {0.0, cam.fy / t.z(), -cam.fy * t.y() / (t.z() * t.z())}};
        Mat3 w = cam.rotation();
        double tj[2][3] = {};
        for (int r = 0; r < 2; ++r) {
            for (int c = 0; c < 3; ++c) {
                for (int k = 0; k < 3; ++k) tj[r][c] += j[r][k] * w(k, c);
            }
        }
        double slow[2][2] = {};
        for (int r = 0; r < 2; ++r) {
            for (int c = 0; c < 2; ++c) {
                for (int a = 0; a < 3; ++a) {
                    for (int b = 0; b < 3; ++b) {
                        slow[r][c] += tj[r][a] * sigma.m(a, b) * tj[c][b];
                    }
                }
            }
        }
        for (int r = 0; r < 2; ++r) {
            for (int c = 0; c < 2; ++c) {
                CHECK(fast(r, c) == doctest::Approx(slow[r][c]).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("correction factor scaling and dilation") {
    Mat2 eye = Mat2::Identity();
    Mat2 out = apply_psi(eye, 1.36);
    CHECK(out(0, 0) == doctest::Approx(1.66));
    CHECK(out(1, 1) == doctest::Approx(1.66));

    Mat2 a;
    a << 1.5, 0.2, 0.2, 0.9;
    out = apply_psi(a, 1.0);
    CHECK((out - (a + 0.3 * eye)).cwiseAbs().maxCoeff() < 1e-15);

    Mat2 d = Vec2(2, 8).asDiagonal();
    out = apply_psi(d, 0.5);
    CHECK(out(0, 0) == doctest::Approx(1.3));
    CHECK(out(1, 1) == doctest::Approx(4.3));

    CHECK_THROWS_AS(apply_psi(eye, 0.0), invalid_parameter);
    CHECK_THROWS_AS(apply_psi(eye, -1.0), invalid_parameter);
}

TEST_CASE("conic and bounding radius") {
    KernelSpec hc = make_kernel(KernelFamily::HalfCosine, 2.0,
                                18.0 / std::numbers::pi);
    ConicRadius cr = conic_and_radius(Mat2::Identity(), hc);
    CHECK(cr.radius == doctest::Approx(3.0));

    KernelSpec g = *kernel_preset("gaussian");
    cr = conic_and_radius(Mat2::Identity(), g);
    CHECK(cr.radius == doctest::Approx(3.0));

    cr = conic_and_radius(Vec2(4, 1).asDiagonal(), g);
    CHECK(cr.radius == doctest::Approx(6.0));

    Mat2 npd;
    npd << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(conic_and_radius(npd, g), degenerate_covariance);
}

TEST_CASE("conic inverts the covariance and eigenvalues match an independent solver") {
    std::mt19937_64 rng(31);
    KernelSpec g = *kernel_preset("gaussian");
    std::uniform_real_distribution<double> u(0.3, 4.0);
    std::uniform_real_distribution<double> uang(0.0, std::numbers::pi);
    for (int trial = 0; trial < 50; ++trial) {
        double l1 = u(rng), l2 = u(rng), ang = uang(rng);
        Mat2 r;
        r << std::cos(ang), -std::sin(ang), std::sin(ang), std::cos(ang);
        Mat2 cov = r * Vec2(l1, l2).asDiagonal() * r.transpose();
        cov = 0.5 * (cov + cov.transpose());

        ConicRadius cr = conic_and_radius(cov, g);
        Mat2 conic;
        conic << cr.conic.a, cr.conic.b, cr.conic.b, cr.conic.c;
        CHECK((conic * cov - Mat2::Identity()).cwiseAbs().maxCoeff() < 1e-9);

        Eigen::SelfAdjointEigenSolver<Mat2> es(cov);
        CHECK(cr.lambda2 == doctest::Approx(es.eigenvalues()(0)).epsilon(1e-10));
        CHECK(cr.lambda1 == doctest::Approx(es.eigenvalues()(1)).epsilon(1e-10));
    }
}

TEST_CASE("projection backward: zero upstream gradient") {
    std::mt19937_64 rng(41);
    Primitive3D p = random_primitive(rng);
    Camera cam = random_camera(rng);
    ProjectionGrads g = backward_projection(Mat2::Zero(), Vec2::Zero(), p, cam, 1.36);
    CHECK(g.d_mu.norm() == 0.0);
    CHECK(g.d_scale.norm() == 0.0);
    CHECK(g.d_rot.norm() == 0.0);
}

TEST_CASE("projection backward is linear in psi through the covariance path") {
    std::mt19937_64 rng(43);
    Primitive3D p = random_primitive(rng);
    Camera cam = random_camera(rng);
    Mat2 a;
    a << 0.7, 0.2, 0.2, -0.4;
    ProjectionGrads g1 = backward_projection(a, Vec2::Zero(), p, cam, 1.0);
    ProjectionGrads g2 = backward_projection(a, Vec2::Zero(), p, cam, 2.0);
    CHECK((g2.d_scale - 2.0 * g1.d_scale).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((g2.d_rot - 2.0 * g1.d_rot).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((g2.d_mu - 2.0 * g1.d_mu).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("projection backward matches central finite differences") {
    std::mt19937_64 rng(47);
    std::normal_distribution<double> n(0.0, 1.0);
    const double step = 1e-4;
    const double psi = 1.36;
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        Primitive3D p = random_primitive(rng);
        Camera cam = random_camera(rng);
        Vec3 t0 = cam.rotation() * p.mu + cam.translation();
        if (t0.z() < 1.0) continue;
        ++checked;

        // Scalar objective: <A, cov2> + b . mu2 with symmetric random A.
        Mat2 a;
        double a00 = n(rng), a01 = n(rng), a11 = n(rng);
        a << a00, a01, a01, a11;
        Vec2 b(n(rng), n(rng));

        auto objective = [&](const Primitive3D& q) {
            Vec3 t = cam.rotation() * q.mu + cam.translation();
            Covariance3 sigma = covariance_from_scale_rot(q.scale, q.rot);
            Mat2 cov2 = apply_psi(project_covariance(sigma, cam, t), psi);
            Vec2 mu2(cam.fx * t.x() / t.z() + cam.cx, cam.fy * t.y() / t.z() + cam.cy);
            return (a.array() * cov2.array()).sum() + b.dot(mu2);
        };

        ProjectionGrads g = backward_projection(a, b, p, cam, psi);

        auto check = [&](double analytic, auto mutate) {
            Primitive3D hi = p, lo = p;
            mutate(hi, step);
            mutate(lo, -step);
            double fd = (objective(hi) - objective(lo)) / (2.0 * step);
            double denom = std::max({std::abs(analytic), std::abs(fd), 1e-6});
            CHECK(std::abs(analytic - fd) / denom < 1e-3);
        };
        for (int k = 0; k < 3; ++k) {
            check(g.d_mu[k], [k](Primitive3D& q, double h) { q.mu[k] += h; });
            check(g.d_scale[k], [k](Primitive3D& q, double h) { q.scale[k] += h; });
        }
        auto bump_quat = [](Primitive3D& q, int k, double h) {
            Eigen::Vector4d v(q.rot.w(), q.rot.x(), q.rot.y(), q.rot.z());
            v[k] += h;
            q.rot = Eigen::Quaterniond(v[0], v[1], v[2], v[3]);
        };
        for (int k = 0; k < 4; ++k) {
            check(g.d_rot[k], [&bump_quat, k](Primitive3D& q, double h) { bump_quat(q, k, h); });
        }
    }
    CHECK(checked >= 80);
}

TEST_CASE("full projection of a primitive") {
    Camera cam = identity_camera();
    KernelSpec g = *kernel_preset("gaussian");
    Primitive3D p;
    p.mu = Vec3(0, 0, 2);
    p.scale = Vec3(0.1, 0.1, 0.1);
    auto s = project_primitive(p, cam, g, 1.0);
    REQUIRE(s.has_value());
    CHECK(s->mu2.x() == doctest::Approx(50.0));
    CHECK(s->depth == doctest::Approx(2.0));
    // cov2 = (0.1 * 100/2)^2 * I + 0.3 * I = 25.3 I
    CHECK(s->cov2(0, 0) == doctest::Approx(25.3).epsilon(1e-9));
    CHECK(s->conic.a == doctest::Approx(1.0 / 25.3).epsilon(1e-9));

    p.mu = Vec3(0, 0, -2);
    CHECK_FALSE(project_primitive(p, cam, g, 1.0).has_value());
}
