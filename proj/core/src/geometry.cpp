#include "darbs/geometry.hpp"

#include <cmath>

#include "darbs/errors.hpp"

namespace darbs {

Covariance3 covariance_from_scale_rot(const Vec3& scale, const Eigen::Quaterniond& rot) {
    if (!(scale.minCoeff() > 0.0)) {
        throw invalid_parameter("covariance_from_scale_rot: scale must be positive");
    }
    Mat3 r = rot.normalized().toRotationMatrix();
    Mat3 m = r * scale.array().square().matrix().asDiagonal() * r.transpose();
    Covariance3 out;
    out.m = 0.5 * (m + m.transpose());  // enforce exact symmetry
    return out;
}

std::optional<std::pair<Vec2, double>> project_point(const Camera& cam, const Vec3& mu) {
    Vec3 t = cam.rotation() * mu + cam.translation();
    if (t.z() <= kNearPlane) {
        return std::nullopt;
    }
    Vec2 px(cam.fx * t.x() / t.z() + cam.cx, cam.fy * t.y() / t.z() + cam.cy);
    return std::make_pair(px, t.z());
}

Eigen::Matrix<double, 2, 3> ewa_jacobian(const Camera& cam, const Vec3& t) {
    double z = t.z();
    Eigen::Matrix<double, 2, 3> j;
    j << cam.fx / z, 0.0, -cam.fx * t.x() / (z * z),
         0.0, cam.fy / z, -cam.fy * t.y() / (z * z);
    return j;
}

Mat2 project_covariance(const Covariance3& sigma, const Camera& cam, const Vec3& t) {
    Eigen::Matrix<double, 2, 3> tj = ewa_jacobian(cam, t) * cam.rotation();
    Mat2 out = tj * sigma.m * tj.transpose();
    return 0.5 * (out + out.transpose());
}

Mat2 apply_psi(const Mat2& cov2_raw, double psi, double dilation) {
    if (!(psi > 0.0)) {
        throw invalid_parameter("apply_psi: psi must be positive");
    }
    return psi * cov2_raw + dilation * Mat2::Identity();
}

ConicRadius conic_and_radius(const Mat2& cov2, const KernelSpec& kernel) {
    double a = cov2(0, 0), b = cov2(0, 1), c = cov2(1, 1);
    double det = a * c - b * b;
    if (!(det > 0.0) || !(a > 0.0)) {
        throw degenerate_covariance("conic_and_radius: covariance not positive definite");
    }
    double mid = 0.5 * (a + c);
    double disc = std::sqrt(std::max(0.0, mid * mid - det));
    ConicRadius out;
    out.lambda1 = mid + disc;
    out.lambda2 = mid - disc;
    out.conic = Conic{c / det, -b / det, a / det};
    out.radius = std::ceil(std::sqrt(cutoff_dm2(kernel)) * std::sqrt(out.lambda1));
    return out;
}

std::optional<ProjectedSplat> project_primitive(const Primitive3D& prim, const Camera& cam,
                                                const KernelSpec& kernel, double psi,
                                                double dilation) {
    auto proj = project_point(cam, prim.mu);
    if (!proj) {
        return std::nullopt;
    }
    Vec3 t = cam.rotation() * prim.mu + cam.translation();
    Covariance3 sigma = covariance_from_scale_rot(prim.scale, prim.rot);
    Mat2 raw = project_covariance(sigma, cam, t);
    Mat2 cov2 = apply_psi(raw, psi, dilation);
    ConicRadius cr = conic_and_radius(cov2, kernel);
    ProjectedSplat s;
    s.mu2 = proj->first;
    s.depth = proj->second;
    s.cov2 = cov2;
    s.conic = cr.conic;
    s.radius = cr.radius;
    s.opacity = prim.opacity;
    s.color = prim.color;
    return s;
}

namespace {

// dR/dq for the unit-quaternion rotation matrix, q = (w, x, y, z).
void rotation_jacobians(const Eigen::Vector4d& q, Mat3 dr[4]) {
    double w = q[0], x = q[1], y = q[2], z = q[3];
    dr[0] << 0, -z, y,
             z, 0, -x,
             -y, x, 0;
    dr[1] << 0, y, z,
             y, -2 * x, -w,
             z, w, -2 * x;
    dr[2] << -2 * y, x, w,
             x, 0, z,
             -w, z, -2 * y;
    dr[3] << -2 * z, -w, x,
             w, -2 * z, y,
             x, y, 0;
    for (int i = 0; i < 4; ++i) dr[i] *= 2.0;
}

}  // namespace

ProjectionGrads backward_projection(const Mat2& grad_cov2, const Vec2& grad_mu2,
                                    const Primitive3D& prim, const Camera& cam, double psi) {
    ProjectionGrads g;

    Eigen::Quaterniond qn = prim.rot.normalized();
    Mat3 r = qn.toRotationMatrix();
    Mat3 m = r * prim.scale.asDiagonal();  // sqrt factor of Sigma
    Mat3 sigma = m * m.transpose();

    Mat3 wrot = cam.rotation();
    Vec3 t = wrot * prim.mu + cam.translation();
    double z = t.z();
    Eigen::Matrix<double, 2, 3> j = ewa_jacobian(cam, t);
    Eigen::Matrix<double, 2, 3> tj = j * wrot;

    // cov2 = psi * T Sigma T^T + dilation I, T = J W_rot.
    Mat2 gsym = 0.5 * (grad_cov2 + grad_cov2.transpose());
    Mat2 graw = psi * gsym;
    Mat3 d_sigma = tj.transpose() * graw * tj;
    Eigen::Matrix<double, 2, 3> d_tj = 2.0 * graw * tj * sigma;
    Eigen::Matrix<double, 2, 3> d_j = d_tj * wrot.transpose();

    // J depends on the camera-space mean.
    Vec3 d_t = Vec3::Zero();
    double z2 = z * z, z3 = z2 * z;
    d_t.x() += d_j(0, 2) * (-cam.fx / z2);
    d_t.y() += d_j(1, 2) * (-cam.fy / z2);
    d_t.z() += d_j(0, 0) * (-cam.fx / z2) + d_j(1, 1) * (-cam.fy / z2) +
               d_j(0, 2) * (2.0 * cam.fx * t.x() / z3) +
               d_j(1, 2) * (2.0 * cam.fy * t.y() / z3);

    // Pixel position path.
    d_t.x() += grad_mu2.x() * cam.fx / z;
    d_t.y() += grad_mu2.y() * cam.fy / z;
    d_t.z() += -grad_mu2.x() * cam.fx * t.x() / z2 - grad_mu2.y() * cam.fy * t.y() / z2;

    g.d_mu = wrot.transpose() * d_t;

    // Sigma = M M^T, M = R diag(scale).
    Mat3 d_m = (d_sigma + d_sigma.transpose()) * m;
    Mat3 d_r = d_m * prim.scale.asDiagonal();
    g.d_scale = (r.transpose() * d_m).diagonal();

    Eigen::Vector4d q(qn.w(), qn.x(), qn.y(), qn.z());
    Mat3 dr[4];
    rotation_jacobians(q, dr);
    Eigen::Vector4d d_qn;
    for (int i = 0; i < 4; ++i) {
        d_qn[i] = (d_r.array() * dr[i].array()).sum();
    }

    // Chain through the normalization of the stored (raw) quaternion.
    Eigen::Vector4d qraw(prim.rot.w(), prim.rot.x(), prim.rot.y(), prim.rot.z());
    double norm = qraw.norm();
    Eigen::Vector4d qu = qraw / norm;
    g.d_rot = (d_qn - qu * qu.dot(d_qn)) / norm;
    return g;
}

}  // namespace darbs
