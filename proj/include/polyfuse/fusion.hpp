#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "polyfuse/geometry.hpp"
#include "polyfuse/image.hpp"
#include "polyfuse/stereo.hpp"

namespace polyfuse {

/// Per-pixel class ids, single channel.
using LabelMap = Image8;

struct ClassEntry {
    std::uint8_t id = 0;
    std::string name;
    std::array<std::uint8_t, 3> color{};
};

class ClassTable {
public:
    static constexpr std::uint8_t kVoid = 255;

    ClassTable() = default;
    explicit ClassTable(std::vector<ClassEntry> entries);

    /// road, sidewalk, terrain, vegetation, sky, person, car, water_hazard
    /// and void, on Cityscapes train ids and colours.
    static ClassTable defaults();

    const std::vector<ClassEntry>& entries() const noexcept { return entries_; }
    const ClassEntry* find(std::uint8_t id) const noexcept;
    bool contains(std::uint8_t id) const noexcept { return find(id) != nullptr; }
    /// Throws UnknownClass.
    std::uint8_t id_of(std::string_view name) const;

private:
    void validate() const;

    std::vector<ClassEntry> entries_;
};

/// Throws UnknownClass when a pixel holds an id missing from the table.
void validate_labels(const LabelMap& labels, const ClassTable& table);

struct RegistrationRig {
    CameraIntrinsics K_color;
    /// Intrinsics of the plane the DoLP values live on.
    CameraIntrinsics K_polar;
    RigidTransform T_color_to_polar;

    void validate() const;
};

/// Intrinsics of the half-resolution superpixel grid of a mosaic camera.
/// Superpixel (i, j) is centred on mosaic position (2i + 0.5, 2j + 0.5).
CameraIntrinsics superpixel_intrinsics(const CameraIntrinsics& K_mosaic);

/// Colour pixel at z-depth `z` mapped into the polarization image. No bounds
/// clamping. Throws NonPositiveDepth or BehindCamera.
Pixel reproject_pixel(const RegistrationRig& rig, const Pixel& u_color, double z);

/// Throws OutOfBounds outside [0, W-1] x [0, H-1]. Bilinear mode treats NaN
/// taps as missing and falls back to the nearest valid tap.
double dolp_lookup(const Plane& dolp, const Pixel& u, Interp mode);

struct WaterParams {
    double delta = 0.6;
    Interp lookup = Interp::Nearest;
};

/// Relabels road pixels whose registered DoLP reaches delta as water_hazard.
/// Pixels with invalid depth or outside the polarization FOV stay unchanged.
LabelMap detect_water(const LabelMap& labels, const DepthMap& depth, const Plane& dolp,
                      const RegistrationRig& rig, const ClassTable& table, const WaterParams& params = {});

/// alpha * class colour + (1 - alpha) * image for non-void pixels.
Image8 overlay_visualization(const Image8& color, const LabelMap& labels, const ClassTable& table, double alpha);

/// Replaces invalid depth samples with the median of valid ones in a k x k window.
DepthMap fill_depth_median(const DepthMap& depth, int k);

}  // namespace polyfuse
