#pragma once

#include <optional>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "darbs/kernel.hpp"

namespace darbs {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

// Symmetric positive-definite 3x3 world covariance.
struct Covariance3 {
    Mat3 m = Mat3::Identity();
};

struct Primitive3D {
    Vec3 mu = Vec3::Zero();
    Vec3 scale = Vec3::Ones();           // sqrt-eigenvalue axes, > 0
    Eigen::Quaterniond rot{1, 0, 0, 0};  // normalized before use
    double opacity = 1.0;                // in [0, 1]
    Vec3 color = Vec3::Ones();           // RGB in [0, 1]^3
};

struct Camera {
    Mat4 w = Mat4::Identity();  // world-to-camera rigid transform
    double fx = 1.0, fy = 1.0;  // focal lengths, pixels
    double cx = 0.0, cy = 0.0;  // principal point, pixels
    int width = 0, height = 0;

    Mat3 rotation() const { return w.topLeftCorner<3, 3>(); }
    Vec3 translation() const { return w.topRightCorner<3, 1>(); }
};

struct Conic {
    double a = 1.0, b = 0.0, c = 1.0;  // entries of inverse(cov2)
};

struct ProjectedSplat {
    Vec2 mu2 = Vec2::Zero();     // pixel position
    Mat2 cov2 = Mat2::Identity();
    Conic conic;
    double radius = 0.0;         // pixels, ceil'd for tile binning
    double depth = 0.0;          // camera-space z
    double opacity = 1.0;
    Vec3 color = Vec3::Ones();
};

inline constexpr double kNearPlane = 0.01;
inline constexpr double kDilation = 0.3;  // px^2 diagonal dilation after psi

Covariance3 covariance_from_scale_rot(const Vec3& scale, const Eigen::Quaterniond& rot);

// Perspective projection of a world point. Empty when culled by the near plane.
std::optional<std::pair<Vec2, double>> project_point(const Camera& cam, const Vec3& mu);

// Jacobian of the affine approximation of the projection at camera-space t.
Eigen::Matrix<double, 2, 3> ewa_jacobian(const Camera& cam, const Vec3& t);

// J * W_rot * Sigma * W_rot^T * J^T; the 2x3 Jacobian already performs the
// 2x2 slice of the full camera-space covariance.
Mat2 project_covariance(const Covariance3& sigma, const Camera& cam, const Vec3& t);

// cov2 = psi * raw + dilation * I.
Mat2 apply_psi(const Mat2& cov2_raw, double psi, double dilation = kDilation);

struct ConicRadius {
    Conic conic;
    double lambda1 = 0.0;  // larger eigenvalue
    double lambda2 = 0.0;
    double radius = 0.0;   // ceil'd to integer pixels
};

ConicRadius conic_and_radius(const Mat2& cov2, const KernelSpec& kernel);

// Full forward projection of one primitive. Empty when near-plane culled.
std::optional<ProjectedSplat> project_primitive(const Primitive3D& prim, const Camera& cam,
                                                const KernelSpec& kernel, double psi,
                                                double dilation = kDilation);

struct ProjectionGrads {
    Vec3 d_mu = Vec3::Zero();
    Vec3 d_scale = Vec3::Zero();
    Eigen::Vector4d d_rot = Eigen::Vector4d::Zero();  // w, x, y, z of the raw quaternion
};

// Reverse-mode chain from (dL/dcov2, dL/dmu2) back to the primitive
// parameters, including the dependence of the EWA Jacobian on the camera-space
// mean. grad_cov2 is interpreted as the gradient w.r.t. the symmetric cov2.
ProjectionGrads backward_projection(const Mat2& grad_cov2, const Vec2& grad_mu2,
                                    const Primitive3D& prim, const Camera& cam, double psi);

}  // namespace darbs
