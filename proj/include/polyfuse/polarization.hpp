#pragma once

#include <array>

#include "polyfuse/image.hpp"

namespace polyfuse {

/// Analyzer angle (degrees) at each position of a 2x2 superpixel, indexed
/// [row][col]. The default is the 90/45 over 135/0 arrangement of Sony
/// IMX250MZR-class sensors.
struct MosaicLayout {
    std::array<std::array<int, 2>, 2> angle_deg{{{90, 45}, {135, 0}}};

    /// Throws InvalidConfig unless each of 0/45/90/135 appears exactly once.
    void validate() const;
};

/// Raw division-of-focal-plane frame with linear intensities in [0, 1].
struct MosaicFrame {
    Plane intensity;
    MosaicLayout layout;

    int width() const noexcept { return intensity.width(); }
    int height() const noexcept { return intensity.height(); }

    /// Throws OddDimensions or InvalidIntensity.
    void validate() const;
};

enum class DemosaicMode { Superpixel, Bilinear };

struct OrientationPlanes {
    Plane i0, i45, i90, i135;
};

struct StokesPlanes {
    Plane s0, s1, s2;
    /// |(I0 + I90) - (I45 + I135)| per pixel.
    Plane residual;
};

struct PolarizationFrame {
    StokesPlanes stokes;
    Plane dolp;

    int width() const noexcept { return dolp.width(); }
    int height() const noexcept { return dolp.height(); }
};

struct FresnelCoefficients {
    double r_s = 0.0;
    double r_p = 0.0;
    double t_s = 0.0;
    double t_p = 0.0;
    /// Refraction angle from Snell's law.
    double theta_t = 0.0;
};

inline constexpr double kDefaultDolpEpsilon = 1e-4;

OrientationPlanes demosaic(const MosaicFrame& mosaic, DemosaicMode mode = DemosaicMode::Superpixel);

StokesPlanes stokes_from_planes(const Plane& i0, const Plane& i45, const Plane& i90, const Plane& i135);

inline StokesPlanes stokes_from_planes(const OrientationPlanes& p) {
    return stokes_from_planes(p.i0, p.i45, p.i90, p.i135);
}

/// sqrt(S1^2 + S2^2) / max(S0, epsilon) clamped to [0, 1]; pixels with
/// S0 < epsilon are NaN.
Plane dolp(const Plane& s0, const Plane& s1, const Plane& s2, double epsilon = kDefaultDolpEpsilon);

/// Single-pixel form of the DoLP expression, without the clamp or floor.
double dolp_value(double s0, double s1, double s2) noexcept;

/// demosaic -> stokes -> dolp.
PolarizationFrame process_mosaic(const MosaicFrame& mosaic, DemosaicMode mode = DemosaicMode::Superpixel,
                                 double epsilon = kDefaultDolpEpsilon);

/// Standard-form Fresnel amplitude coefficients at a planar interface.
FresnelCoefficients fresnel(double n1, double n2, double theta_i);

/// DoLP of the reflected beam for unpolarised incident light.
double reflection_dolp(double n1, double n2, double theta_i);

/// Brewster angle atan(n2 / n1).
double brewster_angle(double n1, double n2);

}  // namespace polyfuse
