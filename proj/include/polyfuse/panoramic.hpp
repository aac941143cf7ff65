#pragma once

#include <iosfwd>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "polyfuse/geometry.hpp"
#include "polyfuse/image.hpp"

namespace polyfuse {

inline constexpr double deg2rad(double deg) noexcept { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad2deg(double rad) noexcept { return rad * 180.0 / std::numbers::pi; }

/// Panoramic annular lens under the f-theta law r = f * theta (theta measured
/// from the lens axis), imaged onto an annulus around `center`.
struct PalModel {
    double focal_mm = 2.13;
    double pixel_pitch_mm = 0.003;
    Pixel center;
    double theta_min = deg2rad(30.0);
    double theta_max = deg2rad(95.0);
    /// Azimuth mapped to unwrapped column 0.
    double azimuth_zero = 0.0;
    /// Relative aperture; carried as metadata only.
    double relative_aperture = 1.0 / 3.2;
    /// Optional odd-order radial terms: r = f (theta + k1 theta^3 + k2 theta^5 + ...) / pitch.
    std::vector<double> radial_coeffs;

    void validate() const;

    /// Radius in pixels for any theta, without the FOV check.
    double radius_px(double theta) const;
    /// Inverse of radius_px.
    double theta_at_radius(double radius_px) const;

    double inner_radius() const { return radius_px(theta_min); }
    double outer_radius() const { return radius_px(theta_max); }
};

/// Per-output-pixel source coordinates into the annular image.
struct UnwrapMapping {
    int out_width = 0;
    int out_height = 0;
    std::vector<float> src_u;
    std::vector<float> src_v;

    std::pair<double, double> source(int col, int row) const {
        const std::size_t k = static_cast<std::size_t>(row) * out_width + col;
        return {src_u[k], src_v[k]};
    }
};

/// Throws ThetaOutOfFov outside [theta_min, theta_max].
double pal_radius(const PalModel& model, double theta);

/// Default unwrap width: the mid-annulus circumference in pixels.
int default_unwrap_width(const PalModel& model);

UnwrapMapping build_unwrap(const PalModel& model, int out_width);

template <typename T>
Image<T> unwrap_image(const Image<T>& annular, const UnwrapMapping& mapping, Interp interp, T fill = T{}) {
    if (mapping.src_u.size() != static_cast<std::size_t>(mapping.out_width) * mapping.out_height ||
        mapping.src_v.size() != mapping.src_u.size()) {
        throw Error(ErrorCode::DimensionMismatch, "unwrap table size does not match its header");
    }
    auto source_of = [&](int x, int y) -> std::optional<std::pair<double, double>> {
        return mapping.source(x, y);
    };
    return remap(annular, mapping.out_width, mapping.out_height, source_of, interp, fill);
}

/// Unit viewing direction (sin t cos a, sin t sin a, cos t) for an annulus
/// pixel. Throws OutsideAnnulus when the pixel's theta is outside the FOV.
Eigen::Vector3d pal_ray(const PalModel& model, const Pixel& px);

/// Forward model: annulus pixel of a PAL-frame direction. Throws ThetaOutOfFov.
Pixel pal_project(const PalModel& model, const Eigen::Vector3d& direction);

/// Binary table: "PALW", u32 LE width, u32 LE height, then f32 LE (u, v)
/// pairs in row-major order.
void write_unwrap_table(std::ostream& os, const UnwrapMapping& mapping);
UnwrapMapping read_unwrap_table(std::istream& is);
void save_unwrap_table(const std::string& path, const UnwrapMapping& mapping);
UnwrapMapping load_unwrap_table(const std::string& path);

}  // namespace polyfuse
