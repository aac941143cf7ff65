#pragma once

#include <Eigen/Dense>

#include "polyfuse/error.hpp"

namespace polyfuse {

using Point3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;

/// Continuous image coordinates: u = column, v = row, origin at the centre
/// of the top-left pixel.
struct Pixel {
    double u = 0.0;
    double v = 0.0;
};

/// Ideal pinhole intrinsics (zero skew, no distortion).
struct CameraIntrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 1;
    int height = 1;

    /// Throws InvalidIntrinsics when fx, fy or the principal point are out of range.
    void validate() const;

    Matrix3 matrix() const;
};

/// Rigid motion mapping points of frame A into frame B: p_B = R * p_A + t.
struct RigidTransform {
    Matrix3 R = Matrix3::Identity();
    Eigen::Vector3d t = Eigen::Vector3d::Zero();

    static RigidTransform identity() { return {}; }

    /// Throws InvalidRotation unless R is orthonormal with det +1 (1e-9 per element).
    void validate() const;

    RigidTransform inverse() const;
};

Point3 transform_point(const RigidTransform& T, const Point3& p);

/// Returns the transform equivalent to applying `first`, then `second`.
RigidTransform compose(const RigidTransform& second, const RigidTransform& first);

Pixel project(const CameraIntrinsics& K, const Point3& p);
Point3 backproject(const CameraIntrinsics& K, const Pixel& px, double z);

/// Unit-length viewing ray direction through a pixel (not normalised in z).
Point3 pixel_ray(const CameraIntrinsics& K, const Pixel& px);

bool is_rotation(const Matrix3& R, double tol = 1e-9);

Matrix3 axis_angle(const Eigen::Vector3d& axis, double angle);

/// Rotation angle in [0, pi].
double rotation_angle(const Matrix3& R);

/// Principal square root of a rotation via axis-angle halving. Throws
/// DegenerateRotation when the angle is within 1e-9 of pi.
Matrix3 rotation_sqrt(const Matrix3& R);

/// Nearest rotation in the Frobenius sense (polar decomposition). Throws
/// InvalidRotation when the correction exceeds `max_correction` per element
/// or the input is a reflection.
Matrix3 nearest_rotation(const Matrix3& M, double max_correction = 1e-6);

}  // namespace polyfuse
