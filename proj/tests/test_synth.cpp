#include <doctest.h>

#include "oracles.hpp"
#include "polyfuse/fusion.hpp"
#include "polyfuse/polarization.hpp"
#include "polyfuse/synth.hpp"

using namespace polyfuse;

namespace {

synth::SceneSpec plane_scene(std::vector<double> depths) {
    synth::SceneSpec spec;
    const CameraIntrinsics K{700, 700, 79.5, 59.5, 160, 120};
    spec.rig.K_left = spec.rig.K_right = spec.rig.K_polar = K;
    spec.rig.T_left_to_right.t = Eigen::Vector3d(-0.063, 0, 0);
    double x = -0.5 * (depths.size() - 1);
    for (double z : depths) {
        synth::Patch p;
        p.center = Point3(x * 0.08 * z, 0, z);
        p.half_u = 0.035 * z;
        p.half_v = 0.2 * z;
        p.texture = {0.01, 0.5, 8};
        spec.patches.push_back(p);
        x += 1;
    }
    return spec;
}

}  // namespace

TEST_CASE("ground-truth disparity follows the reciprocal law") {
    const synth::StereoRender one = synth::render_stereo(plane_scene({2.0}));
    CHECK(one.disparity(80, 60) == doctest::Approx(22.05).epsilon(1e-12));
    CHECK(one.depth.z(80, 60) == doctest::Approx(2.0).epsilon(1e-12));

    const synth::SceneSpec two = plane_scene({1.0, 4.0});
    const synth::StereoRender r = synth::render_stereo(two);
    const Pixel near = project(two.rig.K_left, two.patches[0].center);
    const Pixel far = project(two.rig.K_left, two.patches[1].center);
    const double d1 = r.disparity(static_cast<int>(near.u), static_cast<int>(near.v));
    const double d4 = r.disparity(static_cast<int>(far.u), static_cast<int>(far.v));
    CHECK(d1 / d4 == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("empty and invalid scenes") {
    synth::SceneSpec spec = plane_scene({});
    try {
        synth::render_stereo(spec);
        FAIL("empty scene rendered");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyScene);
    }
    CHECK_THROWS_AS(synth::render_mosaic(spec), Error);
    spec = plane_scene({1.0});
    spec.patches[0].half_u = 0;
    CHECK_THROWS_AS(synth::render_stereo(spec), Error);
    spec = plane_scene({1.0});
    spec.patches[0].material = synth::Material::Specular;
    spec.patches[0].n2 = 1.0;
    CHECK_THROWS_AS(synth::render_mosaic(spec), Error);
}

TEST_CASE("renders are deterministic for a seed") {
    synth::SceneSpec spec = plane_scene({1.5});
    spec.noise.stereo_sigma = 2.0;
    spec.noise.mosaic_sigma = 0.01;
    const auto a = synth::render_stereo(spec);
    const auto b = synth::render_stereo(spec);
    CHECK(a.left == b.left);
    CHECK(a.right == b.right);
    CHECK(synth::render_mosaic(spec).mosaic.intensity == synth::render_mosaic(spec).mosaic.intensity);
    spec.seed = 2;
    CHECK_FALSE(synth::render_stereo(spec).left == a.left);
}

TEST_CASE("all-diffuse mosaic is unpolarised and satisfies the Stokes identity") {
    const synth::MosaicRender r = synth::render_mosaic(plane_scene({1.0, 2.0}));
    const PolarizationFrame pf = process_mosaic(r.mosaic);
    for (int j = 0; j < pf.height(); ++j) {
        for (int i = 0; i < pf.width(); ++i) {
            CHECK(pf.dolp(i, j) < 1e-12);
            CHECK(pf.stokes.residual(i, j) < 1e-15);
        }
    }
}

TEST_CASE("Brewster geometry gives full polarisation") {
    for (double n2 : {1.33, 1.5}) {
        synth::SceneSpec spec;
        const CameraIntrinsics K{100, 100, 32.5, 32.5, 64, 64};
        spec.rig.K_left = spec.rig.K_right = spec.rig.K_polar = K;
        spec.rig.T_left_to_right.t = Eigen::Vector3d(-0.1, 0, 0);
        const double theta = brewster_angle(1.0, n2);
        synth::Patch p;
        p.center = Point3(0, 0, 2);
        p.axis_u = Eigen::Vector3d::UnitY();
        p.axis_v = Eigen::Vector3d(std::cos(theta), 0, std::sin(theta));
        p.half_u = p.half_v = 1.0;
        p.material = synth::Material::Specular;
        p.n2 = n2;
        p.albedo = 0;
        spec.patches = {p};
        const synth::MosaicRender r = synth::render_mosaic(spec);
        const PolarizationFrame pf = process_mosaic(r.mosaic);
        CHECK(r.incidence(16, 16) == doctest::Approx(theta).epsilon(1e-12));
        CHECK(std::abs(pf.dolp(16, 16) - 1.0) < 1e-6);
        CHECK(std::abs(r.dolp(16, 16) - 1.0) < 1e-6);
    }
}

TEST_CASE("multimodal consistency of depth and mosaic rays") {
    const synth::SceneSpec spec = synth::street_scene(160, 120, true);
    const synth::StereoRender st = synth::render_stereo(spec);
    const synth::MosaicRender mo = synth::render_mosaic(spec);
    const RegistrationRig rig{spec.rig.K_left, superpixel_intrinsics(spec.rig.K_polar), spec.rig.T_left_to_polar};
    int checked = 0;
    for (int y = 0; y < 120; y += 3) {
        for (int x = 0; x < 160; x += 3) {
            const double z = st.depth.z(x, y);
            if (!is_valid(z)) continue;
            const Pixel q = reproject_pixel(rig, {double(x), double(y)}, z);
            CHECK(q.u == doctest::Approx(x).epsilon(1e-9));
            CHECK(q.v == doctest::Approx(y).epsilon(1e-9));
            // Same surface seen through the same ray.
            CHECK(mo.patch_index(x, y) == st.patch_index(x, y));
            const auto hit = synth::cast_ray(spec, Point3::Zero(), pixel_ray(spec.rig.K_left, {double(x), double(y)}));
            REQUIRE(hit);
            CHECK(std::abs(hit->point.z() - z) < 1e-6);
            ++checked;
        }
    }
    CHECK(checked > 500);
}

TEST_CASE("street scene shows the puddle as a high-DoLP road region") {
    const synth::SceneSpec spec = synth::street_scene(160, 120, true);
    const ClassTable table = ClassTable::defaults();
    const synth::StereoRender st = synth::render_stereo(spec, table);
    const synth::MosaicRender mo = synth::render_mosaic(spec);
    int puddle = 0;
    for (int y = 0; y < 120; ++y) {
        for (int x = 0; x < 160; ++x) {
            if (st.patch_index(x, y) != 1) continue;
            ++puddle;
            CHECK(st.labels(x, y) == table.id_of("road"));
            CHECK(mo.dolp(x, y) >= 0.6);
        }
    }
    CHECK(puddle > 100);
}

TEST_CASE("hue helper is piecewise linear") {
    CHECK(synth::hue_to_rgb(0.0) == std::array<std::uint8_t, 3>{255, 0, 0});
    CHECK(synth::hue_to_rgb(1.0 / 3) == std::array<std::uint8_t, 3>{0, 255, 0});
    for (int k = 0; k < 600; ++k) {
        const double h = k / 600.0;
        const auto c = synth::hue_to_rgb(h);
        CHECK(std::abs(oracle::hue_diff(oracle::rgb_hue(c[0], c[1], c[2]), h)) <= 0.5 / (6 * 255) + 1e-12);
    }
}
