#include "polyfuse/geometry.hpp"

#include <algorithm>
#include <Eigen/SVD>
#include <cmath>
#include <numbers>
#include <string>

namespace polyfuse {

void CameraIntrinsics::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) {
        throw Error(ErrorCode::InvalidIntrinsics, "focal lengths must be positive");
    }
    if (width <= 0 || height <= 0) {
        throw Error(ErrorCode::InvalidIntrinsics, "image size must be positive");
    }
    if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
        throw Error(ErrorCode::InvalidIntrinsics, "principal point outside the image");
    }
}

Matrix3 CameraIntrinsics::matrix() const {
    Matrix3 K;
    K << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
    return K;
}

void RigidTransform::validate() const {
    if (!is_rotation(R)) {
        throw Error(ErrorCode::InvalidRotation, "R is not a proper rotation");
    }
    if (!t.allFinite()) {
        throw Error(ErrorCode::InvalidRotation, "translation is not finite");
    }
}

RigidTransform RigidTransform::inverse() const {
    RigidTransform inv;
    inv.R = R.transpose();
    inv.t = -(inv.R * t);
    return inv;
}

Point3 transform_point(const RigidTransform& T, const Point3& p) { return T.R * p + T.t; }

RigidTransform compose(const RigidTransform& second, const RigidTransform& first) {
    RigidTransform out;
    out.R = second.R * first.R;
    out.t = second.R * first.t + second.t;
    return out;
}

Pixel project(const CameraIntrinsics& K, const Point3& p) {
    if (!(p.z() > 0.0)) {
        throw Error(ErrorCode::NonPositiveDepth, "cannot project a point with z <= 0");
    }
    return {K.fx * p.x() / p.z() + K.cx, K.fy * p.y() / p.z() + K.cy};
}

Point3 backproject(const CameraIntrinsics& K, const Pixel& px, double z) {
    if (!(z > 0.0)) {
        throw Error(ErrorCode::NonPositiveDepth, "back-projection depth must be positive");
    }
    return {(px.u - K.cx) * z / K.fx, (px.v - K.cy) * z / K.fy, z};
}

Point3 pixel_ray(const CameraIntrinsics& K, const Pixel& px) {
    return Point3((px.u - K.cx) / K.fx, (px.v - K.cy) / K.fy, 1.0).normalized();
}

bool is_rotation(const Matrix3& R, double tol) {
    if (!R.allFinite()) return false;
    const Matrix3 err = R.transpose() * R - Matrix3::Identity();
    return err.cwiseAbs().maxCoeff() <= tol && std::abs(R.determinant() - 1.0) <= tol;
}

Matrix3 axis_angle(const Eigen::Vector3d& axis, double angle) {
    const Eigen::Vector3d a = axis.normalized();
    Matrix3 K;
    K << 0.0, -a.z(), a.y(), a.z(), 0.0, -a.x(), -a.y(), a.x(), 0.0;
    return Matrix3::Identity() + std::sin(angle) * K + (1.0 - std::cos(angle)) * K * K;
}

namespace {

// sin(angle) * axis, read from the skew-symmetric part.
Eigen::Vector3d skew_part(const Matrix3& R) {
    return 0.5 * Eigen::Vector3d(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
}

}  // namespace

double rotation_angle(const Matrix3& R) {
    const double c = std::clamp(0.5 * (R.trace() - 1.0), -1.0, 1.0);
    return std::atan2(skew_part(R).norm(), c);
}

Matrix3 rotation_sqrt(const Matrix3& R) {
    if (!is_rotation(R)) {
        throw Error(ErrorCode::InvalidRotation, "rotation_sqrt needs a proper rotation");
    }
    const Eigen::Vector3d v = skew_part(R);
    const double s = v.norm();
    const double c = std::clamp(0.5 * (R.trace() - 1.0), -1.0, 1.0);
    const double angle = std::atan2(s, c);
    if (std::numbers::pi - angle < 1e-9) {
        throw Error(ErrorCode::DegenerateRotation, "rotation angle is pi; square root is ambiguous");
    }
    if (s == 0.0) return Matrix3::Identity();

    Eigen::Vector3d axis;
    if (c > 0.0) {
        axis = v / s;
    } else {
        // Beyond 90 degrees the skew part loses precision; the symmetric part
        // (R + R^T)/2 - cos(angle) I = (1 - cos(angle)) a a^T does not.
        const Matrix3 B = 0.5 * (R + R.transpose()) - c * Matrix3::Identity();
        Eigen::Index k = 0;
        B.diagonal().maxCoeff(&k);
        axis = B.col(k).normalized();
        if (axis.dot(v) < 0.0) axis = -axis;
    }
    return axis_angle(axis, 0.5 * angle);
}

Matrix3 nearest_rotation(const Matrix3& M, double max_correction) {
    if (!M.allFinite()) {
        throw Error(ErrorCode::InvalidRotation, "rotation contains non-finite values");
    }
    Eigen::JacobiSVD<Matrix3> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Matrix3 U = svd.matrixU();
    const Matrix3 V = svd.matrixV();
    if ((U * V.transpose()).determinant() < 0.0) {
        throw Error(ErrorCode::InvalidRotation, "matrix is a reflection, not a rotation");
    }
    const Matrix3 R = U * V.transpose();
    const double correction = (R - M).cwiseAbs().maxCoeff();
    if (correction > max_correction) {
        throw Error(ErrorCode::InvalidRotation,
                    "orthonormality correction " + std::to_string(correction) + " exceeds limit");
    }
    return R;
}

}  // namespace polyfuse
