#include "polyfuse/polarization.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace polyfuse {

void MosaicLayout::validate() const {
    std::array<int, 4> seen{};
    for (const auto& row : angle_deg) {
        for (int a : row) {
            if (a != 0 && a != 45 && a != 90 && a != 135) {
                throw Error(ErrorCode::InvalidConfig, "mosaic angle must be 0, 45, 90 or 135");
            }
            ++seen[static_cast<std::size_t>(a / 45)];
        }
    }
    for (int n : seen) {
        if (n != 1) throw Error(ErrorCode::InvalidConfig, "mosaic layout must use each angle once");
    }
}

void MosaicFrame::validate() const {
    layout.validate();
    if (intensity.width() % 2 != 0 || intensity.height() % 2 != 0 || intensity.empty()) {
        throw Error(ErrorCode::OddDimensions, "mosaic dimensions must be even and non-zero");
    }
    for (double v : intensity.data()) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw Error(ErrorCode::InvalidIntensity, "mosaic intensity outside [0, 1]");
        }
    }
}

namespace {

Plane& plane_for(OrientationPlanes& p, int angle) {
    switch (angle) {
        case 0: return p.i0;
        case 45: return p.i45;
        case 90: return p.i90;
        default: return p.i135;
    }
}

}  // namespace

OrientationPlanes demosaic(const MosaicFrame& mosaic, DemosaicMode mode) {
    mosaic.validate();
    const int W = mosaic.width();
    const int H = mosaic.height();
    const int Wg = W / 2;
    const int Hg = H / 2;
    const Plane& m = mosaic.intensity;

    OrientationPlanes out;
    const int ow = mode == DemosaicMode::Superpixel ? Wg : W;
    const int oh = mode == DemosaicMode::Superpixel ? Hg : H;
    out.i0 = Plane(ow, oh);
    out.i45 = Plane(ow, oh);
    out.i90 = Plane(ow, oh);
    out.i135 = Plane(ow, oh);

    for (int oy = 0; oy < 2; ++oy) {
        for (int ox = 0; ox < 2; ++ox) {
            Plane& dst = plane_for(out, mosaic.layout.angle_deg[oy][ox]);
            if (mode == DemosaicMode::Superpixel) {
                for (int j = 0; j < Hg; ++j) {
                    for (int i = 0; i < Wg; ++i) dst(i, j) = m(2 * i + ox, 2 * j + oy);
                }
                continue;
            }
            // Same-orientation samples form a stride-2 lattice offset by (ox, oy);
            // interpolate on it with border replication.
            for (int y = 0; y < H; ++y) {
                const double gy = std::clamp((y - oy) / 2.0, 0.0, Hg - 1.0);
                const int j0 = static_cast<int>(gy);
                const int j1 = std::min(j0 + 1, Hg - 1);
                const double ay = gy - j0;
                for (int x = 0; x < W; ++x) {
                    const double gx = std::clamp((x - ox) / 2.0, 0.0, Wg - 1.0);
                    const int i0 = static_cast<int>(gx);
                    const int i1 = std::min(i0 + 1, Wg - 1);
                    const double ax = gx - i0;
                    const double top = (1.0 - ax) * m(2 * i0 + ox, 2 * j0 + oy) + ax * m(2 * i1 + ox, 2 * j0 + oy);
                    const double bot = (1.0 - ax) * m(2 * i0 + ox, 2 * j1 + oy) + ax * m(2 * i1 + ox, 2 * j1 + oy);
                    dst(x, y) = (1.0 - ay) * top + ay * bot;
                }
            }
        }
    }
    return out;
}

StokesPlanes stokes_from_planes(const Plane& i0, const Plane& i45, const Plane& i90, const Plane& i135) {
    require_same_shape(i0, i45, "I0 and I45 differ in size");
    require_same_shape(i0, i90, "I0 and I90 differ in size");
    require_same_shape(i0, i135, "I0 and I135 differ in size");
    const int W = i0.width();
    const int H = i0.height();
    StokesPlanes s{Plane(W, H), Plane(W, H), Plane(W, H), Plane(W, H)};
    for (std::size_t k = 0; k < i0.size(); ++k) {
        const double a0 = i0.data()[k];
        const double a45 = i45.data()[k];
        const double a90 = i90.data()[k];
        const double a135 = i135.data()[k];
        s.s0.data()[k] = a0 + a90;
        s.s1.data()[k] = a0 - a90;
        s.s2.data()[k] = a45 - a135;
        s.residual.data()[k] = std::abs((a0 + a90) - (a45 + a135));
    }
    return s;
}

double dolp_value(double s0, double s1, double s2) noexcept { return std::hypot(s1, s2) / s0; }

Plane dolp(const Plane& s0, const Plane& s1, const Plane& s2, double epsilon) {
    require_same_shape(s0, s1, "S0 and S1 differ in size");
    require_same_shape(s0, s2, "S0 and S2 differ in size");
    if (!(epsilon > 0.0)) {
        throw Error(ErrorCode::InvalidThreshold, "DoLP epsilon must be positive");
    }
    Plane out(s0.width(), s0.height());
    for (std::size_t k = 0; k < s0.size(); ++k) {
        const double total = s0.data()[k];
        if (!(total >= epsilon)) {
            out.data()[k] = kInvalid;
            continue;
        }
        out.data()[k] = std::clamp(dolp_value(total, s1.data()[k], s2.data()[k]), 0.0, 1.0);
    }
    return out;
}

PolarizationFrame process_mosaic(const MosaicFrame& mosaic, DemosaicMode mode, double epsilon) {
    PolarizationFrame frame;
    frame.stokes = stokes_from_planes(demosaic(mosaic, mode));
    frame.dolp = dolp(frame.stokes.s0, frame.stokes.s1, frame.stokes.s2, epsilon);
    return frame;
}

FresnelCoefficients fresnel(double n1, double n2, double theta_i) {
    if (!(n1 > 0.0) || !(n2 > 0.0)) {
        throw Error(ErrorCode::InvalidRange, "refractive indices must be positive");
    }
    if (!(theta_i >= 0.0 && theta_i < std::numbers::pi / 2)) {
        throw Error(ErrorCode::InvalidRange, "incidence angle must lie in [0, pi/2)");
    }
    const double sin_t = n1 * std::sin(theta_i) / n2;
    if (sin_t > 1.0) {
        throw Error(ErrorCode::TotalInternalReflection, "no refracted ray at this incidence angle");
    }
    const double cos_i = std::cos(theta_i);
    const double cos_t = std::sqrt(1.0 - sin_t * sin_t);

    FresnelCoefficients c;
    c.theta_t = std::asin(sin_t);
    const double ds = n1 * cos_i + n2 * cos_t;
    const double dp = n2 * cos_i + n1 * cos_t;
    c.r_s = (n1 * cos_i - n2 * cos_t) / ds;
    c.t_s = 2.0 * n1 * cos_i / ds;
    // Sign chosen so that r_p = r_s at normal incidence.
    c.r_p = (n1 * cos_t - n2 * cos_i) / dp;
    c.t_p = 2.0 * n1 * cos_i / dp;
    return c;
}

double reflection_dolp(double n1, double n2, double theta_i) {
    const FresnelCoefficients c = fresnel(n1, n2, theta_i);
    const double Rs = c.r_s * c.r_s;
    const double Rp = c.r_p * c.r_p;
    if (Rs + Rp < 1e-15) {
        throw Error(ErrorCode::ZeroReflectance, "interface does not reflect");
    }
    return std::abs(Rs - Rp) / (Rs + Rp);
}

double brewster_angle(double n1, double n2) {
    if (!(n1 > 0.0) || !(n2 > 0.0)) {
        throw Error(ErrorCode::InvalidRange, "refractive indices must be positive");
    }
    return std::atan2(n2, n1);
}

}  // namespace polyfuse
