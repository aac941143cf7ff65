#include "polyfuse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace polyfuse::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Wave {
    double kx, ky, phase;
};

// Deterministic per-patch plane-wave sets plus shading.
class Shader {
public:
    explicit Shader(const SceneSpec& spec) : spec_(spec) {
        waves_.resize(spec.patches.size());
        for (std::size_t i = 0; i < spec.patches.size(); ++i) {
            const Texture& tex = spec.patches[i].texture;
            std::mt19937_64 rng(spec.seed * 0x9E3779B97F4A7C15ull + i + 1);
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            for (int k = 0; k < tex.components; ++k) {
                const double wavelength = tex.period_m * (1.0 + unit(rng));
                const double dir = kTwoPi * unit(rng);
                const double phase = kTwoPi * unit(rng);
                waves_[i].push_back({kTwoPi * std::cos(dir) / wavelength, kTwoPi * std::sin(dir) / wavelength, phase});
            }
        }
    }

    double albedo(int patch, const Point3& p) const {
        const Patch& P = spec_.patches[static_cast<std::size_t>(patch)];
        const auto& waves = waves_[static_cast<std::size_t>(patch)];
        if (waves.empty() || P.texture.contrast == 0.0) return P.albedo;
        const Eigen::Vector3d rel = p - P.center;
        const double s = rel.dot(P.axis_u);
        const double t = rel.dot(P.axis_v);
        double sum = 0.0;
        for (const auto& w : waves) sum += std::cos(w.kx * s + w.ky * t + w.phase);
        return P.albedo * (1.0 + P.texture.contrast * sum / static_cast<double>(waves.size()));
    }

    // (S0, S1, S2) towards a camera; S1/S2 expressed in the camera image axes.
    Eigen::Vector3d stokes(const Hit& hit, const Eigen::Vector3d& view_dir, const Matrix3& world_to_cam) const {
        const Patch& P = spec_.patches[static_cast<std::size_t>(hit.patch)];
        const Eigen::Vector3d w = view_dir.normalized();
        Eigen::Vector3d n = P.normal().normalized();
        if (n.dot(w) > 0.0) n = -n;

        const Illumination& L = spec_.light;
        const double shading = L.ambient + L.sun * std::max(0.0, n.dot(L.to_light.normalized()));
        Eigen::Vector3d s(std::max(0.0, albedo(hit.patch, hit.point)) * shading, 0.0, 0.0);
        if (P.material == Material::Diffuse) return s;

        const double theta = std::acos(std::clamp(-w.dot(n), 0.0, 1.0));
        const FresnelCoefficients f = fresnel(1.0, P.n2, std::min(theta, std::numbers::pi / 2 - 1e-12));
        const double Rs = f.r_s * f.r_s;
        const double Rp = f.r_p * f.r_p;
        s.x() += L.sky_radiance * 0.5 * (Rs + Rp);
        const double polarized = L.sky_radiance * 0.5 * (Rs - Rp);
        const Eigen::Vector3d e_s = w.cross(n);
        if (e_s.norm() < 1e-12 || polarized == 0.0) return s;
        const Eigen::Vector3d e = world_to_cam * e_s.normalized();
        const double psi = std::atan2(e.y(), e.x());
        s.y() = polarized * std::cos(2.0 * psi);
        s.z() = polarized * std::sin(2.0 * psi);
        return s;
    }

    double incidence(const Hit& hit, const Eigen::Vector3d& view_dir) const {
        const Eigen::Vector3d w = view_dir.normalized();
        const Eigen::Vector3d n = spec_.patches[static_cast<std::size_t>(hit.patch)].normal().normalized();
        return std::acos(std::clamp(std::abs(w.dot(n)), 0.0, 1.0));
    }

private:
    const SceneSpec& spec_;
    std::vector<std::vector<Wave>> waves_;
};

struct CameraPose {
    Point3 origin;
    Matrix3 cam_to_world;
    Matrix3 world_to_cam;
};

CameraPose pose_of(const RigidTransform& world_to_cam) {
    return {-(world_to_cam.R.transpose() * world_to_cam.t), world_to_cam.R.transpose(), world_to_cam.R};
}

Eigen::Vector3d camera_ray(const CameraIntrinsics& K, double u, double v) {
    return {(u - K.cx) / K.fx, (v - K.cy) / K.fy, 1.0};
}

void require_patches(const SceneSpec& spec) {
    if (spec.patches.empty()) throw Error(ErrorCode::EmptyScene, "scene has no patches");
}

std::uint8_t label_id(const ClassTable& table, const std::string& name) {
    return table.id_of(name);
}

}  // namespace

void SceneSpec::validate() const {
    for (const auto& p : patches) {
        if (!(p.half_u > 0.0) || !(p.half_v > 0.0)) {
            throw Error(ErrorCode::InvalidScene, "patch extent must be positive");
        }
        if (std::abs(p.axis_u.norm() - 1.0) > 1e-9 || std::abs(p.axis_v.norm() - 1.0) > 1e-9 ||
            std::abs(p.axis_u.dot(p.axis_v)) > 1e-9) {
            throw Error(ErrorCode::InvalidScene, "patch axes must be orthonormal");
        }
        if (p.material == Material::Specular && !(p.n2 > 1.0)) {
            throw Error(ErrorCode::InvalidScene, "specular patches need n2 > 1");
        }
        if (!(p.albedo >= 0.0) || !(p.texture.period_m > 0.0) || p.texture.components < 0) {
            throw Error(ErrorCode::InvalidScene, "invalid patch albedo or texture");
        }
    }
    try {
        rig.K_left.validate();
        rig.K_right.validate();
        rig.K_polar.validate();
        rig.T_left_to_right.validate();
        rig.T_left_to_polar.validate();
        if (rig.pal) {
            rig.pal->model.validate();
            rig.pal->T_left_to_pal.validate();
        }
    } catch (const Error& e) {
        throw Error(ErrorCode::InvalidScene, e.what());
    }
    if (rig.K_polar.width % 2 != 0 || rig.K_polar.height % 2 != 0) {
        throw Error(ErrorCode::InvalidScene, "polarization sensor size must be even");
    }
    if (supersample < 1) throw Error(ErrorCode::InvalidScene, "supersample must be >= 1");
    if (noise.stereo_sigma < 0.0 || noise.mosaic_sigma < 0.0 || noise.mosaic_bits < 0 || noise.mosaic_bits > 16) {
        throw Error(ErrorCode::InvalidScene, "invalid noise model");
    }
}

std::optional<Hit> cast_ray(const SceneSpec& spec, const Point3& origin, const Eigen::Vector3d& dir) {
    std::optional<Hit> best;
    for (std::size_t i = 0; i < spec.patches.size(); ++i) {
        const Patch& p = spec.patches[i];
        const Eigen::Vector3d n = p.normal();
        const double denom = n.dot(dir);
        if (std::abs(denom) < 1e-12) continue;
        const double t = n.dot(p.center - origin) / denom;
        if (!(t > 1e-9) || (best && t >= best->t)) continue;
        const Point3 x = origin + t * dir;
        const Eigen::Vector3d rel = x - p.center;
        if (std::abs(rel.dot(p.axis_u)) > p.half_u || std::abs(rel.dot(p.axis_v)) > p.half_v) continue;
        best = Hit{static_cast<int>(i), t, x};
    }
    return best;
}

double analyzer_intensity(const Eigen::Vector3d& stokes, double phi_rad) {
    // Multiples of 45 degrees use exact trigonometric values so that noise-free
    // mosaics satisfy I0 + I90 = I45 + I135 to rounding.
    const double k = std::round(phi_rad / (std::numbers::pi / 4.0));
    if (std::abs(phi_rad - k * std::numbers::pi / 4.0) < 1e-12) {
        static constexpr double kCos[4] = {1.0, 0.0, -1.0, 0.0};
        static constexpr double kSin[4] = {0.0, 1.0, 0.0, -1.0};
        const auto i = static_cast<std::size_t>(((static_cast<long>(k) % 4) + 4) % 4);
        return 0.5 * (stokes.x() + stokes.y() * kCos[i] + stokes.z() * kSin[i]);
    }
    return 0.5 * (stokes.x() + stokes.y() * std::cos(2.0 * phi_rad) + stokes.z() * std::sin(2.0 * phi_rad));
}

std::array<std::uint8_t, 3> hue_to_rgb(double hue) {
    double h = hue - std::floor(hue);
    const double x = h * 6.0;
    const int sector = std::min(5, static_cast<int>(x));
    const double f = x - sector;
    double r = 0, g = 0, b = 0;
    switch (sector) {
        case 0: r = 1; g = f; b = 0; break;
        case 1: r = 1 - f; g = 1; b = 0; break;
        case 2: r = 0; g = 1; b = f; break;
        case 3: r = 0; g = 1 - f; b = 1; break;
        case 4: r = f; g = 0; b = 1; break;
        default: r = 1; g = 0; b = 1 - f; break;
    }
    return {saturate<std::uint8_t>(255.0 * r), saturate<std::uint8_t>(255.0 * g), saturate<std::uint8_t>(255.0 * b)};
}

StereoRender render_stereo(const SceneSpec& spec, const ClassTable& table) {
    spec.validate();
    require_patches(spec);
    const Shader shader(spec);
    const SceneRig& rig = spec.rig;
    const int n = spec.supersample;
    const CameraPose left_pose{Point3::Zero(), Matrix3::Identity(), Matrix3::Identity()};
    const CameraPose right_pose = pose_of(rig.T_left_to_right);
    const double baseline = rig.T_left_to_right.t.norm();

    std::uint8_t background_label = ClassTable::kVoid;
    for (const auto& e : table.entries()) {
        if (e.name == "sky") background_label = e.id;
    }
    std::vector<std::uint8_t> patch_labels;
    for (const auto& p : spec.patches) patch_labels.push_back(label_id(table, p.label));

    auto render = [&](const CameraIntrinsics& K, const CameraPose& pose) {
        GrayImage img(K.width, K.height, 1);
        for (int y = 0; y < K.height; ++y) {
            for (int x = 0; x < K.width; ++x) {
                double acc = 0.0;
                for (int j = 0; j < n; ++j) {
                    for (int i = 0; i < n; ++i) {
                        const double u = x + (i + 0.5) / n - 0.5;
                        const double v = y + (j + 0.5) / n - 0.5;
                        const Eigen::Vector3d dir = pose.cam_to_world * camera_ray(K, u, v);
                        const auto hit = cast_ray(spec, pose.origin, dir);
                        const double radiance =
                            hit ? shader.stokes(*hit, dir, pose.world_to_cam).x() : spec.light.background;
                        acc += std::clamp(radiance, 0.0, 1.0);
                    }
                }
                img(x, y) = static_cast<float>(255.0 * acc / (n * n));
            }
        }
        return img;
    };

    StereoRender out;
    out.left = render(rig.K_left, left_pose);
    out.right = render(rig.K_right, right_pose);

    const CameraIntrinsics& K = rig.K_left;
    out.depth.z = Plane(K.width, K.height, 1, kInvalid);
    out.depth.z_min = 0.0;
    out.depth.z_max = std::numeric_limits<double>::infinity();
    out.disparity = Plane(K.width, K.height, 1, kInvalid);
    out.labels = LabelMap(K.width, K.height, 1, background_label);
    out.patch_index = Image<int>(K.width, K.height, 1, -1);
    for (int y = 0; y < K.height; ++y) {
        for (int x = 0; x < K.width; ++x) {
            const auto hit = cast_ray(spec, Point3::Zero(), camera_ray(K, x, y));
            if (!hit) continue;
            // The ray has unit z, so the hit parameter is the z-depth.
            out.depth.z(x, y) = hit->point.z();
            out.disparity(x, y) = K.fx * baseline / hit->point.z();
            out.labels(x, y) = patch_labels[static_cast<std::size_t>(hit->patch)];
            out.patch_index(x, y) = hit->patch;
        }
    }

    if (spec.noise.stereo_sigma > 0.0) {
        std::mt19937_64 rng(spec.seed ^ 0x53544552454fULL);
        std::normal_distribution<double> gauss(0.0, spec.noise.stereo_sigma);
        for (auto* img : {&out.left, &out.right}) {
            for (float& v : img->data()) v = static_cast<float>(std::clamp(v + gauss(rng), 0.0, 255.0));
        }
    }
    return out;
}

MosaicRender render_mosaic(const SceneSpec& spec) {
    spec.validate();
    require_patches(spec);
    const Shader shader(spec);
    const CameraIntrinsics& K = spec.rig.K_polar;
    const CameraPose pose = pose_of(spec.rig.T_left_to_polar);
    const int Wg = K.width / 2;
    const int Hg = K.height / 2;

    MosaicRender out;
    out.mosaic.intensity = Plane(K.width, K.height);
    out.dolp = Plane(Wg, Hg, 1, 0.0);
    out.incidence = Plane(Wg, Hg, 1, kInvalid);
    out.patch_index = Image<int>(Wg, Hg, 1, -1);

    std::mt19937_64 rng(spec.seed ^ 0x4d4f53414943ULL);
    std::normal_distribution<double> gauss(0.0, spec.noise.mosaic_sigma > 0.0 ? spec.noise.mosaic_sigma : 1.0);
    const double levels = spec.noise.mosaic_bits > 0 ? std::ldexp(1.0, spec.noise.mosaic_bits) - 1.0 : 0.0;

    for (int j = 0; j < Hg; ++j) {
        for (int i = 0; i < Wg; ++i) {
            // All four analyzers of a superpixel observe its centre ray.
            const Eigen::Vector3d dir = pose.cam_to_world * camera_ray(K, 2 * i + 0.5, 2 * j + 0.5);
            const auto hit = cast_ray(spec, pose.origin, dir);
            Eigen::Vector3d s(spec.light.background, 0.0, 0.0);
            if (hit) {
                s = shader.stokes(*hit, dir, pose.world_to_cam);
                out.patch_index(i, j) = hit->patch;
                if (spec.patches[static_cast<std::size_t>(hit->patch)].material == Material::Specular) {
                    out.incidence(i, j) = shader.incidence(*hit, dir);
                }
            }
            out.dolp(i, j) = s.x() > 0.0 ? std::hypot(s.y(), s.z()) / s.x() : 0.0;
            for (int oy = 0; oy < 2; ++oy) {
                for (int ox = 0; ox < 2; ++ox) {
                    const double phi = deg2rad(out.mosaic.layout.angle_deg[oy][ox]);
                    double I = analyzer_intensity(s, phi);
                    if (spec.noise.mosaic_sigma > 0.0) I += gauss(rng);
                    I = std::clamp(I, 0.0, 1.0);
                    if (levels > 0.0) I = std::round(I * levels) / levels;
                    out.mosaic.intensity(2 * i + ox, 2 * j + oy) = I;
                }
            }
        }
    }
    return out;
}

Image8 render_annulus(const SceneSpec& spec) {
    if (!spec.rig.pal) throw Error(ErrorCode::InvalidScene, "scene has no PAL rig");
    const PalRig& pal = *spec.rig.pal;
    pal.model.validate();
    if (pal.width <= 0 || pal.height <= 0) throw Error(ErrorCode::InvalidScene, "PAL image size must be positive");
    if (pal.shading == PalShading::Scene) require_patches(spec);

    const Shader shader(spec);
    const CameraPose pose = pose_of(pal.T_left_to_pal);
    const PalModel& m = pal.model;
    const Eigen::Vector3d up_world = pose.cam_to_world * Eigen::Vector3d::UnitZ();

    Image8 out(pal.width, pal.height, 3, 0);
    for (int y = 0; y < pal.height; ++y) {
        for (int x = 0; x < pal.width; ++x) {
            const double du = x - m.center.u;
            const double dv = y - m.center.v;
            const double theta = m.theta_at_radius(std::hypot(du, dv));
            if (!(theta >= m.theta_min && theta <= m.theta_max)) continue;
            const double az = std::atan2(dv, du);
            std::array<std::uint8_t, 3> rgb{};
            switch (pal.shading) {
                case PalShading::Constant: {
                    const auto g = saturate<std::uint8_t>(pal.constant);
                    rgb = {g, g, g};
                    break;
                }
                case PalShading::AzimuthHue:
                    rgb = hue_to_rgb((az - m.azimuth_zero) / kTwoPi);
                    break;
                case PalShading::Spokes: {
                    const double a = rad2deg(az);
                    const double rem = a - pal.spoke_period_deg * std::round(a / pal.spoke_period_deg);
                    const std::uint8_t g = std::abs(rem) <= pal.spoke_half_width_deg ? 255 : 0;
                    rgb = {g, g, g};
                    break;
                }
                case PalShading::Smooth: {
                    const double tn = (theta - m.theta_min) / (m.theta_max - m.theta_min);
                    const double g = 128.0 + 80.0 * std::cos(3.0 * az) * std::cos(std::numbers::pi * tn) +
                                     30.0 * std::sin(2.0 * az + 1.0);
                    const auto q = saturate<std::uint8_t>(g);
                    rgb = {q, q, q};
                    break;
                }
                case PalShading::Scene: {
                    const Eigen::Vector3d local(std::sin(theta) * std::cos(az), std::sin(theta) * std::sin(az),
                                                std::cos(theta));
                    const Eigen::Vector3d dir = pose.cam_to_world * local;
                    const auto hit = cast_ray(spec, pose.origin, dir);
                    double radiance = spec.light.background * (0.75 + 0.25 * dir.normalized().dot(up_world));
                    if (hit) radiance = shader.stokes(*hit, dir, pose.world_to_cam).x();
                    const auto q = saturate<std::uint8_t>(255.0 * std::clamp(radiance, 0.0, 1.0));
                    rgb = {q, q, q};
                    break;
                }
            }
            for (int c = 0; c < 3; ++c) out(x, y, c) = rgb[static_cast<std::size_t>(c)];
        }
    }
    return out;
}

SceneSpec street_scene(int width, int height, bool identity_polar) {
    SceneSpec spec;
    spec.seed = 7;

    const double f = 700.0 * width / 640.0;
    CameraIntrinsics K{f, f, (width - 1) / 2.0, (height - 1) / 2.0, width, height};
    spec.rig.K_left = K;
    spec.rig.K_right = K;
    spec.rig.T_left_to_right.t = Eigen::Vector3d(-0.12, 0.0, 0.0);

    if (identity_polar) {
        spec.rig.K_polar = {2.0 * f, 2.0 * f, 2.0 * K.cx + 0.5, 2.0 * K.cy + 0.5, 2 * width, 2 * height};
    } else {
        // Narrower field of view, offset mount.
        spec.rig.K_polar = {1.25 * f, 1.25 * f, (width - 1) / 2.0, (height - 1) / 2.0, width, height};
        spec.rig.T_left_to_polar.R = axis_angle(Eigen::Vector3d::UnitY(), deg2rad(1.0));
        spec.rig.T_left_to_polar.t = Eigen::Vector3d(-0.06, 0.04, 0.0);
    }

    // Vehicle frame: origin at the left camera, y down, z forward and level.
    // The camera is pitched down so the puddle is seen near Brewster's angle.
    const double pitch = deg2rad(25.0);
    Matrix3 cam_from_vehicle;
    cam_from_vehicle << 1, 0, 0, 0, std::cos(pitch), -std::sin(pitch), 0, std::sin(pitch), std::cos(pitch);

    auto add = [&](Eigen::Vector3d c, Eigen::Vector3d au, Eigen::Vector3d av, double hu, double hv, Material mat,
                   double albedo, double period, double contrast, const char* label, double n2 = 1.5) {
        Patch p;
        p.center = cam_from_vehicle * c;
        p.axis_u = cam_from_vehicle * au;
        p.axis_v = cam_from_vehicle * av;
        p.half_u = hu;
        p.half_v = hv;
        p.material = mat;
        p.albedo = albedo;
        p.texture = {period, contrast, 16};
        p.label = label;
        p.n2 = n2;
        spec.patches.push_back(p);
    };
    const Eigen::Vector3d X = Eigen::Vector3d::UnitX();
    const Eigen::Vector3d Y = Eigen::Vector3d::UnitY();
    const Eigen::Vector3d Z = Eigen::Vector3d::UnitZ();

    add({0.0, 1.5, 15.25}, X, Z, 4.0, 14.75, Material::Diffuse, 0.35, 0.05, 0.8, "road");
    add({0.3, 1.4995, 2.1}, X, Z, 0.7, 0.3, Material::Specular, 0.1, 0.05, 1.0, "road", 1.33);
    add({5.5, 1.35, 15.25}, X, Z, 1.5, 14.75, Material::Diffuse, 0.5, 0.08, 0.7, "sidewalk");
    add({-2.2, 0.9, 7.0}, X, Y, 1.0, 0.6, Material::Diffuse, 0.4, 0.1, 0.8, "car");
    add({-2.2, 0.1, 6.98}, X, Y, 0.8, 0.25, Material::Specular, 0.05, 0.1, 0.3, "car", 1.5);
    add({-3.5, 0.0, 15.0}, Z, Y, 14.5, 1.5, Material::Diffuse, 0.3, 0.15, 0.8, "vegetation");

    spec.light.sky_radiance = 8.0;

    PalRig pal;
    const int side = std::max(16, height);
    pal.width = side;
    pal.height = side;
    pal.model.center = {(side - 1) / 2.0, (side - 1) / 2.0};
    pal.model.pixel_pitch_mm = pal.model.focal_mm * pal.model.theta_max / (0.47 * side);
    Matrix3 pal_from_vehicle;
    pal_from_vehicle << 1, 0, 0, 0, 0, 1, 0, -1, 0;
    pal.T_left_to_pal.R = pal_from_vehicle * cam_from_vehicle.transpose();
    const Point3 pal_origin_cam = cam_from_vehicle * Point3(0.0, -0.15, 0.0);
    pal.T_left_to_pal.t = -(pal.T_left_to_pal.R * pal_origin_cam);
    spec.rig.pal = pal;
    return spec;
}

}  // namespace polyfuse::synth
