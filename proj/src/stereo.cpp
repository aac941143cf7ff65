#include "polyfuse/stereo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace polyfuse {

RectificationResult build_rectification(const CameraIntrinsics& K_left, const CameraIntrinsics& K_right,
                                        const RigidTransform& T_left_to_right) {
    K_left.validate();
    K_right.validate();
    T_left_to_right.validate();
    const double baseline = T_left_to_right.t.norm();
    if (baseline < 1e-9) {
        throw Error(ErrorCode::DegenerateBaseline, "stereo baseline is zero");
    }

    const Matrix3 half = rotation_sqrt(T_left_to_right.R);  // R^{1/2}
    const Matrix3 half_inv = half.transpose();              // R^{-1/2}

    // Right camera centre seen from the half-way frame.
    const Eigen::Vector3d c = -(half_inv * T_left_to_right.t);
    const Eigen::Vector3d ex = c.normalized();
    Eigen::Vector3d ey = Eigen::Vector3d::UnitZ().cross(ex);
    if (ey.norm() < 1e-12) {
        throw Error(ErrorCode::DegenerateBaseline, "baseline is parallel to the optical axis");
    }
    ey.normalize();
    const Eigen::Vector3d ez = ex.cross(ey);

    Matrix3 R_rect;
    R_rect.row(0) = ex.transpose();
    R_rect.row(1) = ey.transpose();
    R_rect.row(2) = ez.transpose();

    RectificationResult out;
    out.R_left = R_rect * half;
    out.R_right = R_rect * half_inv;
    out.K_rect = K_left;
    out.baseline = baseline;
    return out;
}

namespace {

// Integral images of I and I^2 for O(1) block variance.
struct BlockStats {
    int w = 0;
    std::vector<double> s1, s2;

    explicit BlockStats(const GrayImage& img) : w(img.width() + 1) {
        const std::size_t n = static_cast<std::size_t>(img.width() + 1) * (img.height() + 1);
        s1.assign(n, 0.0);
        s2.assign(n, 0.0);
        for (int y = 0; y < img.height(); ++y) {
            double r1 = 0.0, r2 = 0.0;
            for (int x = 0; x < img.width(); ++x) {
                const double v = img(x, y);
                r1 += v;
                r2 += v * v;
                at(s1, x + 1, y + 1) = at(s1, x + 1, y) + r1;
                at(s2, x + 1, y + 1) = at(s2, x + 1, y) + r2;
            }
        }
    }

    double& at(std::vector<double>& s, int x, int y) { return s[static_cast<std::size_t>(y) * w + x]; }
    double get(const std::vector<double>& s, int x, int y) const { return s[static_cast<std::size_t>(y) * w + x]; }

    double variance(int x, int y, int r) const {
        const int x0 = x - r, y0 = y - r, x1 = x + r + 1, y1 = y + r + 1;
        const double n = static_cast<double>((2 * r + 1) * (2 * r + 1));
        const double a = get(s1, x1, y1) - get(s1, x0, y1) - get(s1, x1, y0) + get(s1, x0, y0);
        const double b = get(s2, x1, y1) - get(s2, x0, y1) - get(s2, x1, y0) + get(s2, x0, y0);
        const double mean = a / n;
        return std::max(0.0, b / n - mean * mean);
    }
};

}  // namespace

DisparityMap match_disparity(const GrayImage& left, const GrayImage& right, const MatchParams& params) {
    require_same_shape(left, right, "left and right images differ in size");
    if (left.channels() != 1 || right.channels() != 1) {
        throw Error(ErrorCode::DimensionMismatch, "block matching needs single-channel images");
    }
    if (params.min_disparity < 0 || params.min_disparity > params.max_disparity || params.block_radius < 0) {
        throw Error(ErrorCode::InvalidRange, "disparity range must satisfy 0 <= min <= max");
    }

    const int W = left.width();
    const int H = left.height();
    const int r = params.block_radius;
    const int dmin = params.min_disparity;
    const int D = params.max_disparity - dmin + 1;

    DisparityMap out;
    out.d = Plane(W, H, 1, kInvalid);
    out.min_disparity = dmin;
    out.max_disparity = params.max_disparity;
    if (W < 2 * r + 1 || H < 2 * r + 1) return out;

    const BlockStats stats(left);
    constexpr double kNoCost = std::numeric_limits<double>::infinity();

    // colsum[k*W + x]: SAD over the vertical window at column x for disparity dmin+k.
    std::vector<double> colsum(static_cast<std::size_t>(D) * W, 0.0);
    std::vector<double> cost(static_cast<std::size_t>(D) * W, kNoCost);
    std::vector<int> best_left(W), best_right(W);

    auto add_row = [&](int y, double sign) {
        const auto L = left.row(y);
        const auto R = right.row(y);
        for (int k = 0; k < D; ++k) {
            const int d = dmin + k;
            double* cs = colsum.data() + static_cast<std::size_t>(k) * W;
            for (int x = d; x < W; ++x) {
                cs[x] += sign * std::abs(static_cast<double>(L[x]) - static_cast<double>(R[x - d]));
            }
        }
    };

    for (int j = 0; j <= 2 * r && j < H; ++j) add_row(j, 1.0);

    for (int y = r; y < H - r; ++y) {
        if (y > r) {
            add_row(y + r, 1.0);
            add_row(y - r - 1, -1.0);
        }

        // Horizontal box sums; a cost exists where both blocks fit: x >= d + r.
        for (int k = 0; k < D; ++k) {
            const int d = dmin + k;
            const double* cs = colsum.data() + static_cast<std::size_t>(k) * W;
            double* c = cost.data() + static_cast<std::size_t>(k) * W;
            std::fill(c, c + W, kNoCost);
            const int x_first = d + r;
            if (x_first > W - 1 - r) continue;
            double acc = 0.0;
            for (int i = x_first - r; i <= x_first + r; ++i) acc += cs[i];
            c[x_first] = acc;
            for (int x = x_first + 1; x <= W - 1 - r; ++x) {
                acc += cs[x + r] - cs[x - r - 1];
                c[x] = acc;
            }
        }

        auto cost_at = [&](int k, int x) { return cost[static_cast<std::size_t>(k) * W + x]; };

        for (int x = 0; x < W; ++x) {
            int bl = -1;
            double bc = kNoCost;
            for (int k = 0; k < D; ++k) {
                const double v = cost_at(k, x);
                if (v < bc) {
                    bc = v;
                    bl = k;
                }
            }
            best_left[x] = bl;

            int br = -1;
            double brc = kNoCost;
            for (int k = 0; k < D; ++k) {
                const int xl = x + dmin + k;
                if (xl >= W) break;
                const double v = cost_at(k, xl);
                if (v < brc) {
                    brc = v;
                    br = k;
                }
            }
            best_right[x] = br;
        }

        for (int x = r; x < W - r; ++x) {
            const int k = best_left[x];
            if (k < 0) continue;
            const int d = dmin + k;
            const int xr = x - d;
            if (xr < 0 || best_right[xr] < 0) continue;
            if (std::abs(k - best_right[xr]) > params.lr_tolerance) continue;
            if (stats.variance(x, y, r) < params.texture_threshold) continue;

            double disparity = d;
            if (params.subpixel && k > 0 && k + 1 < D) {
                const double cm = cost_at(k - 1, x);
                const double c0 = cost_at(k, x);
                const double cp = cost_at(k + 1, x);
                const double denom = cm - 2.0 * c0 + cp;
                if (std::isfinite(cm) && std::isfinite(cp) && denom > 0.0) {
                    disparity += std::clamp(0.5 * (cm - cp) / denom, -0.5, 0.5);
                }
            }
            out.d(x, y) = std::clamp(disparity, static_cast<double>(dmin),
                                     static_cast<double>(params.max_disparity));
        }
    }
    return out;
}

DepthMap disparity_to_depth(const DisparityMap& disp, double focal_px, double baseline_m, double z_min,
                            double z_max) {
    if (!(focal_px > 0.0) || !(baseline_m > 0.0)) {
        throw Error(ErrorCode::InvalidRange, "focal length and baseline must be positive");
    }
    if (!(z_min >= 0.0) || !(z_min <= z_max)) {
        throw Error(ErrorCode::InvalidRange, "depth range must satisfy 0 <= z_min <= z_max");
    }
    DepthMap out;
    out.z = Plane(disp.width(), disp.height(), 1, kInvalid);
    out.z_min = z_min;
    out.z_max = z_max;
    const double fb = focal_px * baseline_m;
    auto& src = disp.d.data();
    auto& dst = out.z.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const double d = src[i];
        if (!(d > 0.0)) continue;
        const double z = fb / d;
        if (z >= z_min && z <= z_max) dst[i] = z;
    }
    return out;
}

DepthMap unrectify_depth(const DepthMap& rectified, const Matrix3& R_left, const CameraIntrinsics& K_rect,
                         const CameraIntrinsics& K_orig) {
    if (rectified.width() != K_rect.width || rectified.height() != K_rect.height) {
        throw Error(ErrorCode::DimensionMismatch, "depth map does not match K_rect");
    }
    DepthMap out;
    out.z = Plane(K_orig.width, K_orig.height, 1, kInvalid);
    out.z_min = rectified.z_min;
    out.z_max = rectified.z_max;
    for (int y = 0; y < K_orig.height; ++y) {
        for (int x = 0; x < K_orig.width; ++x) {
            const Point3 ray_orig((x - K_orig.cx) / K_orig.fx, (y - K_orig.cy) / K_orig.fy, 1.0);
            const Point3 ray_rect = R_left * ray_orig;
            if (!(ray_rect.z() > 0.0)) continue;
            const double u = K_rect.fx * ray_rect.x() / ray_rect.z() + K_rect.cx;
            const double v = K_rect.fy * ray_rect.y() / ray_rect.z() + K_rect.cy;
            const auto zr = sample(rectified.z, u, v, 0, Interp::Nearest);
            if (!zr || !is_valid(*zr)) continue;
            // ray_orig has unit z, so the point along it is ray_orig * (z_rect / ray_rect.z).
            const double z = *zr / ray_rect.z();
            if (z >= out.z_min && z <= out.z_max) out.z(x, y) = z;
        }
    }
    return out;
}

}  // namespace polyfuse
