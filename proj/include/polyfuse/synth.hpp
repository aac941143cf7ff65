#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "polyfuse/fusion.hpp"
#include "polyfuse/geometry.hpp"
#include "polyfuse/image.hpp"
#include "polyfuse/panoramic.hpp"
#include "polyfuse/polarization.hpp"
#include "polyfuse/stereo.hpp"

namespace polyfuse::synth {

enum class Material { Diffuse, Specular };

/// Band-limited albedo modulation: a sum of plane waves with wavelengths
/// between `period_m` and 2 * `period_m`.
struct Texture {
    double period_m = 0.05;
    double contrast = 0.0;
    int components = 6;
};

/// Rectangular planar patch in the left-camera (world) frame.
struct Patch {
    Point3 center = Point3::Zero();
    Eigen::Vector3d axis_u = Eigen::Vector3d::UnitX();
    Eigen::Vector3d axis_v = Eigen::Vector3d::UnitY();
    double half_u = 1.0;
    double half_v = 1.0;
    Material material = Material::Diffuse;
    /// Refractive index of specular patches.
    double n2 = 1.5;
    /// Unpolarised diffuse albedo (specular patches add it on top of the reflection).
    double albedo = 0.5;
    Texture texture;
    std::string label = "road";

    Eigen::Vector3d normal() const { return axis_u.cross(axis_v); }
};

struct Illumination {
    /// Direction from the scene towards the distant light, world frame.
    Eigen::Vector3d to_light = Eigen::Vector3d(0.3, -1.0, -0.4).normalized();
    double ambient = 0.35;
    double sun = 0.65;
    /// Unpolarised sky radiance mirrored by specular patches.
    double sky_radiance = 1.0;
    /// Radiance of rays that hit nothing.
    double background = 0.8;
};

struct NoiseModel {
    /// On the 0..255 stereo intensity scale.
    double stereo_sigma = 0.0;
    /// On the [0, 1] linear mosaic intensity.
    double mosaic_sigma = 0.0;
    /// 0 keeps float intensities; otherwise quantise the mosaic to this many bits.
    int mosaic_bits = 0;
};

enum class PalShading { Scene, Constant, AzimuthHue, Spokes, Smooth };

struct PalRig {
    PalModel model;
    RigidTransform T_left_to_pal;
    int width = 0;
    int height = 0;
    PalShading shading = PalShading::Scene;
    /// Constant shading level (0..255).
    double constant = 128.0;
    double spoke_period_deg = 10.0;
    double spoke_half_width_deg = 1.0;
};

struct SceneRig {
    CameraIntrinsics K_left;
    CameraIntrinsics K_right;
    RigidTransform T_left_to_right;
    /// Mosaic (full sensor) resolution intrinsics.
    CameraIntrinsics K_polar;
    RigidTransform T_left_to_polar;
    std::optional<PalRig> pal;
};

struct SceneSpec {
    std::vector<Patch> patches;
    Illumination light;
    SceneRig rig;
    NoiseModel noise;
    std::uint64_t seed = 1;
    /// Samples per pixel edge for the stereo renders.
    int supersample = 3;

    /// Throws InvalidScene.
    void validate() const;
};

struct StereoRender {
    GrayImage left;
    GrayImage right;
    DepthMap depth;
    /// f * baseline / z for pixels on a patch; NaN elsewhere.
    Plane disparity;
    LabelMap labels;
    /// Index of the patch hit by each left pixel's centre ray; -1 for none.
    Image<int> patch_index;
};

struct MosaicRender {
    MosaicFrame mosaic;
    /// DoLP per superpixel (mosaic / 2 resolution).
    Plane dolp;
    /// Incidence angle per superpixel on specular patches; NaN elsewhere.
    Plane incidence;
    /// Index of the patch hit by each superpixel's ray; -1 for none.
    Image<int> patch_index;
};

/// Ray/patch intersection along o + t d, t > 0. Returns the nearest hit.
struct Hit {
    int patch = -1;
    double t = 0.0;
    Point3 point = Point3::Zero();
};
std::optional<Hit> cast_ray(const SceneSpec& spec, const Point3& origin, const Eigen::Vector3d& dir);

StereoRender render_stereo(const SceneSpec& spec, const ClassTable& table = ClassTable::defaults());
MosaicRender render_mosaic(const SceneSpec& spec);
/// RGB annular image from the PAL rig.
Image8 render_annulus(const SceneSpec& spec);

/// Analyzer intensity I_phi = (S0 + S1 cos 2phi + S2 sin 2phi) / 2.
double analyzer_intensity(const Eigen::Vector3d& stokes, double phi_rad);

/// Hue in [0, 1) to an RGB triple at full saturation and value.
std::array<std::uint8_t, 3> hue_to_rgb(double hue);

/// Street-like scene: road with a water puddle, sidewalk, car, vegetation,
/// a stereo rig of the given size, a polarization camera and a PAL.
/// `identity_polar` co-locates the polarization camera with the left camera
/// and doubles its mosaic resolution so superpixels align with colour pixels.
SceneSpec street_scene(int width, int height, bool identity_polar = false);

}  // namespace polyfuse::synth
