#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "polyfuse/polarization.hpp"
#include "polyfuse/synth.hpp"

using namespace polyfuse;

namespace {

Plane constant(int w, int h, double v) { return Plane(w, h, 1, v); }

double angle_of(const MosaicLayout& l, int x, int y) { return l.angle_deg[y % 2][x % 2]; }

}  // namespace

TEST_CASE("demosaic constant mosaic in both modes") {
    MosaicFrame m{constant(8, 6, 0.5), {}};
    for (auto mode : {DemosaicMode::Superpixel, DemosaicMode::Bilinear}) {
        const OrientationPlanes p = demosaic(m, mode);
        for (const Plane* plane : {&p.i0, &p.i45, &p.i90, &p.i135}) {
            for (double v : plane->data()) CHECK(v == 0.5);
        }
    }
    CHECK(demosaic(m, DemosaicMode::Superpixel).i0.width() == 4);
    CHECK(demosaic(m, DemosaicMode::Bilinear).i0.width() == 8);
}

TEST_CASE("superpixel demosaic reads the layout") {
    MosaicFrame m{Plane(2, 2), {}};
    m.intensity(0, 0) = 0.9;
    m.intensity(1, 0) = 0.45;
    m.intensity(0, 1) = 0.135;
    m.intensity(1, 1) = 0.0;
    const OrientationPlanes p = demosaic(m);
    CHECK(p.i90(0, 0) == 0.9);
    CHECK(p.i45(0, 0) == 0.45);
    CHECK(p.i135(0, 0) == 0.135);
    CHECK(p.i0(0, 0) == 0.0);
}

TEST_CASE("custom layout is honoured and validated") {
    MosaicFrame m{Plane(2, 2), {}};
    m.layout.angle_deg = {{{0, 45}, {135, 90}}};
    m.intensity(0, 0) = 0.7;
    CHECK(demosaic(m).i0(0, 0) == 0.7);
    m.layout.angle_deg = {{{0, 0}, {135, 90}}};
    CHECK_THROWS_AS(demosaic(m), Error);
}

TEST_CASE("mosaic validation") {
    try {
        demosaic(MosaicFrame{constant(3, 4, 0.1), {}});
        FAIL("odd width accepted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::OddDimensions);
    }
    MosaicFrame bad{constant(4, 4, 0.1), {}};
    bad.intensity(1, 1) = 1.5;
    try {
        demosaic(bad);
        FAIL("intensity > 1 accepted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidIntensity);
    }
}

TEST_CASE("bilinear demosaic follows a smooth analytic field") {
    const int W = 128, H = 96;
    auto field = [](double x, double y) {
        const double s0 = 0.5 + 0.15 * std::sin(2 * oracle::kPi * x / 48) * std::cos(2 * oracle::kPi * y / 40);
        const double p = 0.3 + 0.2 * std::cos(2 * oracle::kPi * (x + y) / 64);
        const double a = 0.5 * oracle::kPi * std::sin(2 * oracle::kPi * y / 80);
        return Eigen::Vector3d(s0, s0 * p * std::cos(2 * a), s0 * p * std::sin(2 * a));
    };
    MosaicFrame m{Plane(W, H), {}};
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            m.intensity(x, y) = synth::analyzer_intensity(field(x, y), deg2rad(angle_of(m.layout, x, y)));
    const OrientationPlanes p = demosaic(m, DemosaicMode::Bilinear);
    double err2 = 0, ref2 = 0;
    const std::array<std::pair<const Plane*, double>, 4> planes{
        {{&p.i0, 0.0}, {&p.i45, 45.0}, {&p.i90, 90.0}, {&p.i135, 135.0}}};
    for (const auto& [plane, deg] : planes) {
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                const double truth = synth::analyzer_intensity(field(x, y), deg2rad(deg));
                err2 += std::pow((*plane)(x, y) - truth, 2);
                ref2 += truth * truth;
            }
        }
    }
    CHECK(std::sqrt(err2 / ref2) < 0.02);
}

TEST_CASE("closed-form Stokes examples") {
    auto one = [](double i0, double i45, double i90, double i135) {
        return stokes_from_planes(constant(1, 1, i0), constant(1, 1, i45), constant(1, 1, i90), constant(1, 1, i135));
    };
    auto s = one(0.5, 0.5, 0.5, 0.5);
    CHECK(s.s0(0, 0) == 1.0);
    CHECK(s.s1(0, 0) == 0.0);
    CHECK(s.s2(0, 0) == 0.0);
    s = one(1, 0.5, 0, 0.5);
    CHECK(s.s0(0, 0) == 1.0);
    CHECK(s.s1(0, 0) == 1.0);
    CHECK(s.s2(0, 0) == 0.0);
    s = one(0.5, 1, 0.5, 0);
    CHECK(s.s0(0, 0) == 1.0);
    CHECK(s.s1(0, 0) == 0.0);
    CHECK(s.s2(0, 0) == 1.0);
    CHECK(s.residual(0, 0) == 0.0);

    CHECK_THROWS_AS(stokes_from_planes(constant(1, 1, 0), constant(2, 1, 0), constant(1, 1, 0), constant(1, 1, 0)),
                    Error);
}

TEST_CASE("dolp examples, clamp and epsilon floor") {
    auto d = [](double s0, double s1, double s2, double eps = kDefaultDolpEpsilon) {
        return dolp(constant(1, 1, s0), constant(1, 1, s1), constant(1, 1, s2), eps)(0, 0);
    };
    CHECK(d(1, 1, 0) == 1.0);
    CHECK(d(1, 0, 0) == 0.0);
    CHECK(d(1, 0.6, 0.8) == 1.0);
    CHECK(d(1, 0.9, 0.9) == 1.0);
    CHECK(std::isnan(d(5e-5, 0, 0)));
    CHECK(d(0.5, 0.1, 0) == doctest::Approx(0.2));
}

TEST_CASE("scaling the planes leaves dolp unchanged") {
    const Plane i0 = constant(2, 2, 0.3), i45 = constant(2, 2, 0.2), i90 = constant(2, 2, 0.1),
                i135 = constant(2, 2, 0.2);
    auto scaled = [](const Plane& p, double c) {
        Plane out = p;
        for (double& v : out.data()) v *= c;
        return out;
    };
    const StokesPlanes a = stokes_from_planes(i0, i45, i90, i135);
    const StokesPlanes b = stokes_from_planes(scaled(i0, 2.5), scaled(i45, 2.5), scaled(i90, 2.5), scaled(i135, 2.5));
    CHECK(b.s0(1, 1) == doctest::Approx(2.5 * a.s0(1, 1)));
    CHECK(dolp(a.s0, a.s1, a.s2)(1, 1) == doctest::Approx(dolp(b.s0, b.s1, b.s2)(1, 1)).epsilon(1e-14));
}

TEST_CASE("Fresnel normal incidence and Brewster") {
    const FresnelCoefficients f = fresnel(1.0, 1.5, 0.0);
    CHECK(std::abs(f.r_s + 0.2) < 1e-12);
    CHECK(std::abs(f.r_p + 0.2) < 1e-12);
    CHECK(std::abs(f.t_s - 0.8) < 1e-12);
    CHECK(std::abs(f.t_p - 0.8) < 1e-12);
    CHECK(std::abs(fresnel(1.0, 1.5, std::atan(1.5)).r_p) < 1e-12);
    CHECK(brewster_angle(1.0, 1.5) == std::atan(1.5));
}

TEST_CASE("Fresnel conserves energy") {
    for (double n2 : {1.33, 1.5, 2.4}) {
        for (int k = 0; k <= 89; ++k) {
            const double ti = deg2rad(k);
            const FresnelCoefficients f = fresnel(1.0, n2, ti);
            const double ratio = n2 * std::cos(f.theta_t) / std::cos(ti);
            CHECK(std::abs(f.r_s * f.r_s + ratio * f.t_s * f.t_s - 1.0) < 1e-12);
            CHECK(std::abs(f.r_p * f.r_p + ratio * f.t_p * f.t_p - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("Fresnel matches the trigonometric forms and rejects bad input") {
    for (int k = 1; k < 89; ++k) {
        const double ti = deg2rad(k);
        const FresnelCoefficients f = fresnel(1.0, 1.5, ti);
        const auto R = oracle::fresnel_reflectance_trig(1.0, 1.5, ti);
        CHECK(std::abs(f.r_s * f.r_s - R[0]) < 1e-12);
        CHECK(std::abs(f.r_p * f.r_p - R[1]) < 1e-12);
    }
    try {
        fresnel(1.5, 1.0, deg2rad(60));
        FAIL("total internal reflection not detected");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TotalInternalReflection);
    }
    CHECK_THROWS_AS(fresnel(1.0, 1.5, oracle::kPi / 2), Error);
    CHECK_THROWS_AS(fresnel(0.0, 1.5, 0.1), Error);
}

TEST_CASE("reflection_dolp examples") {
    CHECK(reflection_dolp(1.0, 1.33, 0.0) == 0.0);
    CHECK(reflection_dolp(1.0, 1.33, brewster_angle(1.0, 1.33)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(reflection_dolp(1.0, 1.33, deg2rad(45)) ==
          doctest::Approx(oracle::malus_dolp(1.0, 1.33, deg2rad(45))).epsilon(1e-12));
    for (int k = 1; k < 90; ++k) {
        const double ti = deg2rad(k);
        CHECK(reflection_dolp(1.0, 1.5, ti) == doctest::Approx(oracle::malus_dolp(1.0, 1.5, ti)).epsilon(1e-10));
    }
    // Continuity across a fine sweep.
    double prev = reflection_dolp(1.0, 1.33, 0.0);
    for (int k = 1; k < 1570; ++k) {
        const double cur = reflection_dolp(1.0, 1.33, k * 1e-3);
        CHECK(std::abs(cur - prev) < 0.01);
        prev = cur;
    }
}

TEST_CASE("synthetic scene separates specular and diffuse patches") {
    synth::SceneSpec spec;
    const CameraIntrinsics K{200, 200, 63.5, 47.5, 128, 96};
    spec.rig.K_left = spec.rig.K_right = K;
    spec.rig.T_left_to_right.t = Eigen::Vector3d(-0.1, 0, 0);
    spec.rig.K_polar = K;
    const double tilt = deg2rad(55);
    synth::Patch water;
    water.center = Point3(-0.4, 0, 2);
    // Normal (sin t, 0, -cos t): incidence equals the tilt on the optical axis.
    water.axis_u = Eigen::Vector3d(0, 1, 0);
    water.axis_v = Eigen::Vector3d(std::cos(tilt), 0, std::sin(tilt));
    water.half_u = water.half_v = 0.3;
    water.material = synth::Material::Specular;
    water.n2 = 1.33;
    water.albedo = 0.0;
    synth::Patch wall;
    wall.center = Point3(0.45, 0, 2);
    wall.half_u = wall.half_v = 0.3;
    wall.albedo = 0.6;
    wall.texture = {0.05, 0.5, 8};
    spec.patches = {water, wall};
    const synth::MosaicRender r = synth::render_mosaic(spec);
    const PolarizationFrame pf = process_mosaic(r.mosaic);
    int water_px = 0, wall_px = 0;
    for (int j = 0; j < pf.height(); ++j) {
        for (int i = 0; i < pf.width(); ++i) {
            const int idx = r.patch_index(i, j);
            if (idx == 0) {
                ++water_px;
                CHECK(pf.dolp(i, j) >= 0.6);
            } else if (idx == 1) {
                ++wall_px;
                CHECK(pf.dolp(i, j) < 0.2);
            }
            CHECK(pf.stokes.residual(i, j) < 1e-15);
        }
    }
    CHECK(water_px > 50);
    CHECK(wall_px > 50);
}
