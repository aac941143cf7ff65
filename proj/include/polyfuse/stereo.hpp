#pragma once

#include <optional>
#include <utility>

#include "polyfuse/geometry.hpp"
#include "polyfuse/image.hpp"

namespace polyfuse {

/// Rotations that map camera-frame points into the rectified frames, plus
/// the shared rectified intrinsics.
///
/// With p_r = R p_l + t, the left camera is turned by R^{-1/2} and the right
/// one by R^{1/2}, so points transform by the inverses: R_left = R_rect R^{1/2}
/// and R_right = R_rect R^{-1/2}. After rectification the right camera sits
/// at (+baseline, 0, 0) in the left rectified frame.
struct RectificationResult {
    Matrix3 R_left = Matrix3::Identity();
    Matrix3 R_right = Matrix3::Identity();
    CameraIntrinsics K_rect;
    double baseline = 0.0;
};

RectificationResult build_rectification(const CameraIntrinsics& K_left, const CameraIntrinsics& K_right,
                                        const RigidTransform& T_left_to_right);

/// Resamples `img` into the rectified camera: each output pixel's ray is
/// rotated back through R_cam^T and projected with K_orig. Pixels with no
/// source are set to `fill`.
template <typename T>
Image<T> rectify_image(const Image<T>& img, const Matrix3& R_cam, const CameraIntrinsics& K_orig,
                       const CameraIntrinsics& K_rect, T fill = T{}) {
    if (img.width() != K_orig.width || img.height() != K_orig.height) {
        throw Error(ErrorCode::DimensionMismatch, "image size does not match K_orig");
    }
    const Matrix3 back = R_cam.transpose();
    auto source_of = [&](int x, int y) -> std::optional<std::pair<double, double>> {
        const Point3 ray((x - K_rect.cx) / K_rect.fx, (y - K_rect.cy) / K_rect.fy, 1.0);
        const Point3 p = back * ray;
        if (!(p.z() > 0.0)) return std::nullopt;
        return std::pair{K_orig.fx * p.x() / p.z() + K_orig.cx, K_orig.fy * p.y() / p.z() + K_orig.cy};
    };
    return remap(img, K_rect.width, K_rect.height, source_of, Interp::Bilinear, fill);
}

struct MatchParams {
    int block_radius = 3;
    int min_disparity = 0;
    int max_disparity = 64;
    /// Blocks whose intensity variance (0..255 scale) is below this are unmatchable.
    double texture_threshold = 4.0;
    /// Maximum disagreement between left->right and right->left matches.
    double lr_tolerance = 1.0;
    bool subpixel = true;
};

/// Per-pixel disparity u_left - u_right of the left image; NaN = invalid.
struct DisparityMap {
    Plane d;
    double min_disparity = 0.0;
    double max_disparity = 0.0;

    int width() const noexcept { return d.width(); }
    int height() const noexcept { return d.height(); }
};

/// Metric z-depth per pixel; NaN = invalid.
struct DepthMap {
    Plane z;
    double z_min = 0.15;
    double z_max = 12.0;

    int width() const noexcept { return z.width(); }
    int height() const noexcept { return z.height(); }
};

/// SAD block matching with left-right consistency and parabolic sub-pixel
/// refinement. Ties in cost go to the smallest disparity.
DisparityMap match_disparity(const GrayImage& left, const GrayImage& right, const MatchParams& params);

DepthMap disparity_to_depth(const DisparityMap& disp, double focal_px, double baseline_m,
                            double z_min = 0.15, double z_max = 12.0);

/// Brings a depth map computed in the rectified left frame back to the
/// original left camera (nearest lookup, z re-expressed in that frame).
DepthMap unrectify_depth(const DepthMap& rectified, const Matrix3& R_left, const CameraIntrinsics& K_rect,
                         const CameraIntrinsics& K_orig);

}  // namespace polyfuse
