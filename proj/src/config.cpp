#include "polyfuse/config.hpp"

#include <cmath>
#include <fstream>

#include <spdlog/spdlog.h>

namespace polyfuse {

namespace fs = std::filesystem;

namespace {

template <typename T>
T value_or(const json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

Eigen::Vector3d parse_vec3(const json& j) {
    if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::InvalidConfig, "expected a 3-vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json vec3_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

// Wraps nlohmann type/key errors into a configuration error of the given code.
template <typename Fn>
auto guarded(ErrorCode code, const std::string& what, Fn&& fn) {
    try {
        return fn();
    } catch (const json::exception& e) {
        throw Error(code, what + ": " + e.what());
    }
}

}  // namespace

json read_json_file(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorCode::Io, "cannot open " + path.string());
    try {
        return json::parse(is);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
    }
}

void write_json_file(const fs::path& path, const json& j) {
    std::ofstream os(path);
    if (!os) throw Error(ErrorCode::Io, "cannot write " + path.string());
    os << j.dump(2) << '\n';
    if (!os) throw Error(ErrorCode::Io, "cannot write " + path.string());
}

CameraIntrinsics parse_intrinsics(const json& j) {
    CameraIntrinsics K;
    K.fx = j.at("fx").get<double>();
    K.fy = j.at("fy").get<double>();
    K.cx = j.at("cx").get<double>();
    K.cy = j.at("cy").get<double>();
    K.width = j.at("width").get<int>();
    K.height = j.at("height").get<int>();
    K.validate();
    return K;
}

json to_json(const CameraIntrinsics& K) {
    return {{"fx", K.fx}, {"fy", K.fy}, {"cx", K.cx}, {"cy", K.cy}, {"width", K.width}, {"height", K.height}};
}

RigidTransform parse_transform(const json& j) {
    RigidTransform T;
    const json& R = j.at("R");
    if (!R.is_array() || R.size() != 3) throw Error(ErrorCode::InvalidRotation, "R must be 3x3");
    Matrix3 M;
    for (int r = 0; r < 3; ++r) {
        const Eigen::Vector3d row = parse_vec3(R[static_cast<std::size_t>(r)]);
        M.row(r) = row.transpose();
    }
    T.R = nearest_rotation(M, 1e-6);
    T.t = parse_vec3(j.at("t"));
    return T;
}

json to_json(const RigidTransform& T) {
    json R = json::array();
    for (int r = 0; r < 3; ++r) R.push_back(json::array({T.R(r, 0), T.R(r, 1), T.R(r, 2)}));
    return {{"R", R}, {"t", vec3_json(T.t)}};
}

PalModel parse_pal(const json& j) {
    PalModel m;
    m.focal_mm = value_or(j, "focal_mm", m.focal_mm);
    if (j.contains("pixel_pitch_mm")) {
        m.pixel_pitch_mm = j.at("pixel_pitch_mm").get<double>();
    } else {
        spdlog::warn("PAL pixel_pitch_mm missing; using default {} mm", m.pixel_pitch_mm);
    }
    const json& c = j.at("center");
    m.center = {c.at(0).get<double>(), c.at(1).get<double>()};
    m.theta_min = deg2rad(value_or(j, "theta_min_deg", rad2deg(m.theta_min)));
    m.theta_max = deg2rad(value_or(j, "theta_max_deg", rad2deg(m.theta_max)));
    m.azimuth_zero = deg2rad(value_or(j, "azimuth_zero_deg", 0.0));
    m.relative_aperture = value_or(j, "relative_aperture", m.relative_aperture);
    m.radial_coeffs = value_or(j, "radial_coeffs", std::vector<double>{});
    m.validate();
    return m;
}

json to_json(const PalModel& m) {
    return {{"focal_mm", m.focal_mm},
            {"pixel_pitch_mm", m.pixel_pitch_mm},
            {"center", json::array({m.center.u, m.center.v})},
            {"theta_min_deg", rad2deg(m.theta_min)},
            {"theta_max_deg", rad2deg(m.theta_max)},
            {"azimuth_zero_deg", rad2deg(m.azimuth_zero)},
            {"relative_aperture", m.relative_aperture},
            {"radial_coeffs", m.radial_coeffs}};
}

namespace {

MosaicLayout parse_layout(const json& j) {
    MosaicLayout layout;
    for (std::size_t r = 0; r < 2; ++r) {
        for (std::size_t c = 0; c < 2; ++c) layout.angle_deg[r][c] = j.at(r).at(c).get<int>();
    }
    layout.validate();
    return layout;
}

json layout_json(const MosaicLayout& l) {
    return json::array({json::array({l.angle_deg[0][0], l.angle_deg[0][1]}),
                        json::array({l.angle_deg[1][0], l.angle_deg[1][1]})});
}

}  // namespace

CalibrationFile parse_calibration(const json& j) {
    try {
        return guarded(ErrorCode::InvalidCalibration, "calibration", [&] {
            CalibrationFile c;
            c.K_left = parse_intrinsics(j.at("K_left"));
            c.K_right = parse_intrinsics(j.at("K_right"));
            c.K_polar = parse_intrinsics(j.at("K_polar"));
            c.T_left_to_right = parse_transform(j.at("T_left_to_right"));
            c.T_left_to_polar = parse_transform(j.at("T_left_to_polar"));
            c.baseline = j.at("baseline").get<double>();
            if (std::abs(c.baseline - c.T_left_to_right.t.norm()) > 1e-6) {
                throw Error(ErrorCode::InvalidCalibration, "baseline disagrees with |T_left_to_right.t|");
            }
            if (j.contains("pal")) c.pal = parse_pal(j.at("pal"));
            if (j.contains("mosaic_layout")) c.layout = parse_layout(j.at("mosaic_layout"));
            return c;
        });
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidCalibration) throw;
        throw Error(ErrorCode::InvalidCalibration, e.what());
    }
}

CalibrationFile load_calibration(const fs::path& path) { return parse_calibration(read_json_file(path)); }

json to_json(const CalibrationFile& c) {
    json j{{"K_left", to_json(c.K_left)},
           {"K_right", to_json(c.K_right)},
           {"K_polar", to_json(c.K_polar)},
           {"T_left_to_right", to_json(c.T_left_to_right)},
           {"T_left_to_polar", to_json(c.T_left_to_polar)},
           {"baseline", c.baseline},
           {"mosaic_layout", layout_json(c.layout)}};
    if (c.pal) j["pal"] = to_json(*c.pal);
    return j;
}

ClassTable parse_class_table(const json& j) {
    return guarded(ErrorCode::InvalidConfig, "class table", [&] {
        std::vector<ClassEntry> entries;
        for (const json& e : j.at("classes")) {
            const int id = e.at("id").get<int>();
            if (id < 0 || id > 255) throw Error(ErrorCode::InvalidConfig, "class id out of range");
            const json& col = e.at("color");
            entries.push_back({static_cast<std::uint8_t>(id), e.at("name").get<std::string>(),
                               {col.at(0).get<std::uint8_t>(), col.at(1).get<std::uint8_t>(),
                                col.at(2).get<std::uint8_t>()}});
        }
        return ClassTable(std::move(entries));
    });
}

ClassTable load_class_table(const fs::path& path) { return parse_class_table(read_json_file(path)); }

json to_json(const ClassTable& table) {
    json classes = json::array();
    for (const auto& e : table.entries()) {
        classes.push_back({{"id", e.id}, {"name", e.name}, {"color", json::array({e.color[0], e.color[1], e.color[2]})}});
    }
    return {{"classes", classes}};
}

namespace {

synth::PalShading parse_shading(const std::string& s) {
    using synth::PalShading;
    if (s == "scene") return PalShading::Scene;
    if (s == "constant") return PalShading::Constant;
    if (s == "azimuth_hue") return PalShading::AzimuthHue;
    if (s == "spokes") return PalShading::Spokes;
    if (s == "smooth") return PalShading::Smooth;
    throw Error(ErrorCode::InvalidScene, "unknown PAL shading " + s);
}

const char* shading_name(synth::PalShading s) {
    switch (s) {
        case synth::PalShading::Scene: return "scene";
        case synth::PalShading::Constant: return "constant";
        case synth::PalShading::AzimuthHue: return "azimuth_hue";
        case synth::PalShading::Spokes: return "spokes";
        case synth::PalShading::Smooth: return "smooth";
    }
    return "scene";
}

synth::Patch parse_patch(const json& j) {
    synth::Patch p;
    p.center = parse_vec3(j.at("center"));
    p.axis_u = parse_vec3(j.at("axis_u"));
    p.axis_v = parse_vec3(j.at("axis_v"));
    p.half_u = j.at("half_u").get<double>();
    p.half_v = j.at("half_v").get<double>();
    const std::string mat = value_or<std::string>(j, "material", "diffuse");
    if (mat == "diffuse") {
        p.material = synth::Material::Diffuse;
    } else if (mat == "specular") {
        p.material = synth::Material::Specular;
    } else {
        throw Error(ErrorCode::InvalidScene, "unknown material " + mat);
    }
    p.n2 = value_or(j, "n2", p.n2);
    p.albedo = value_or(j, "albedo", p.albedo);
    if (j.contains("texture")) {
        const json& t = j.at("texture");
        p.texture.period_m = value_or(t, "period_m", p.texture.period_m);
        p.texture.contrast = value_or(t, "contrast", p.texture.contrast);
        p.texture.components = value_or(t, "components", p.texture.components);
    }
    p.label = value_or<std::string>(j, "label", p.label);
    return p;
}

json patch_json(const synth::Patch& p) {
    return {{"center", vec3_json(p.center)},
            {"axis_u", vec3_json(p.axis_u)},
            {"axis_v", vec3_json(p.axis_v)},
            {"half_u", p.half_u},
            {"half_v", p.half_v},
            {"material", p.material == synth::Material::Specular ? "specular" : "diffuse"},
            {"n2", p.n2},
            {"albedo", p.albedo},
            {"texture",
             {{"period_m", p.texture.period_m}, {"contrast", p.texture.contrast}, {"components", p.texture.components}}},
            {"label", p.label}};
}

}  // namespace

synth::SceneSpec parse_scene(const json& j) {
    return guarded(ErrorCode::InvalidScene, "scene", [&] {
        synth::SceneSpec spec;
        if (j.contains("preset")) {
            const json& pr = j.at("preset");
            const std::string name = value_or<std::string>(pr, "name", "street");
            if (name != "street") throw Error(ErrorCode::InvalidScene, "unknown preset " + name);
            spec = synth::street_scene(value_or(pr, "width", 640), value_or(pr, "height", 480),
                                       value_or(pr, "identity_polar", false));
        }
        spec.seed = value_or<std::uint64_t>(j, "seed", spec.seed);
        spec.supersample = value_or(j, "supersample", spec.supersample);
        if (j.contains("light")) {
            const json& l = j.at("light");
            if (l.contains("to_light")) spec.light.to_light = parse_vec3(l.at("to_light")).normalized();
            spec.light.ambient = value_or(l, "ambient", spec.light.ambient);
            spec.light.sun = value_or(l, "sun", spec.light.sun);
            spec.light.sky_radiance = value_or(l, "sky_radiance", spec.light.sky_radiance);
            spec.light.background = value_or(l, "background", spec.light.background);
        }
        if (j.contains("noise")) {
            const json& n = j.at("noise");
            spec.noise.stereo_sigma = value_or(n, "stereo_sigma", spec.noise.stereo_sigma);
            spec.noise.mosaic_sigma = value_or(n, "mosaic_sigma", spec.noise.mosaic_sigma);
            spec.noise.mosaic_bits = value_or(n, "mosaic_bits", spec.noise.mosaic_bits);
        }
        if (j.contains("rig")) {
            const json& r = j.at("rig");
            if (r.contains("K_left")) spec.rig.K_left = parse_intrinsics(r.at("K_left"));
            if (r.contains("K_right")) spec.rig.K_right = parse_intrinsics(r.at("K_right"));
            if (r.contains("T_left_to_right")) spec.rig.T_left_to_right = parse_transform(r.at("T_left_to_right"));
            if (r.contains("K_polar")) spec.rig.K_polar = parse_intrinsics(r.at("K_polar"));
            if (r.contains("T_left_to_polar")) spec.rig.T_left_to_polar = parse_transform(r.at("T_left_to_polar"));
            if (r.contains("pal")) {
                const json& p = r.at("pal");
                synth::PalRig pal = spec.rig.pal.value_or(synth::PalRig{});
                if (p.contains("model")) pal.model = parse_pal(p.at("model"));
                if (p.contains("T_left_to_pal")) pal.T_left_to_pal = parse_transform(p.at("T_left_to_pal"));
                pal.width = value_or(p, "width", pal.width);
                pal.height = value_or(p, "height", pal.height);
                if (p.contains("shading")) pal.shading = parse_shading(p.at("shading").get<std::string>());
                pal.constant = value_or(p, "constant", pal.constant);
                pal.spoke_period_deg = value_or(p, "spoke_period_deg", pal.spoke_period_deg);
                pal.spoke_half_width_deg = value_or(p, "spoke_half_width_deg", pal.spoke_half_width_deg);
                spec.rig.pal = pal;
            }
        }
        if (j.contains("patches")) {
            spec.patches.clear();
            for (const json& p : j.at("patches")) spec.patches.push_back(parse_patch(p));
        }
        spec.validate();
        return spec;
    });
}

synth::SceneSpec load_scene(const fs::path& path) { return parse_scene(read_json_file(path)); }

json to_json(const synth::SceneSpec& spec) {
    json rig{{"K_left", to_json(spec.rig.K_left)},
             {"K_right", to_json(spec.rig.K_right)},
             {"T_left_to_right", to_json(spec.rig.T_left_to_right)},
             {"K_polar", to_json(spec.rig.K_polar)},
             {"T_left_to_polar", to_json(spec.rig.T_left_to_polar)}};
    if (spec.rig.pal) {
        const synth::PalRig& p = *spec.rig.pal;
        rig["pal"] = {{"model", to_json(p.model)},
                      {"T_left_to_pal", to_json(p.T_left_to_pal)},
                      {"width", p.width},
                      {"height", p.height},
                      {"shading", shading_name(p.shading)},
                      {"constant", p.constant},
                      {"spoke_period_deg", p.spoke_period_deg},
                      {"spoke_half_width_deg", p.spoke_half_width_deg}};
    }
    json patches = json::array();
    for (const auto& p : spec.patches) patches.push_back(patch_json(p));
    return {{"seed", spec.seed},
            {"supersample", spec.supersample},
            {"light",
             {{"to_light", vec3_json(spec.light.to_light)},
              {"ambient", spec.light.ambient},
              {"sun", spec.light.sun},
              {"sky_radiance", spec.light.sky_radiance},
              {"background", spec.light.background}}},
            {"noise",
             {{"stereo_sigma", spec.noise.stereo_sigma},
              {"mosaic_sigma", spec.noise.mosaic_sigma},
              {"mosaic_bits", spec.noise.mosaic_bits}}},
            {"rig", rig},
            {"patches", patches}};
}

int parse_fill_depth(const std::string& spec) {
    if (spec.empty() || spec == "none") return 0;
    const std::string prefix = "median:";
    if (spec.rfind(prefix, 0) != 0) throw Error(ErrorCode::InvalidConfig, "fill-depth must look like median:k");
    int k = 0;
    try {
        k = std::stoi(spec.substr(prefix.size()));
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidConfig, "fill-depth window is not a number");
    }
    if (k < 1 || k % 2 == 0) throw Error(ErrorCode::InvalidConfig, "fill-depth window must be odd and positive");
    return k;
}

DemosaicMode parse_demosaic(const std::string& s) {
    if (s == "superpixel") return DemosaicMode::Superpixel;
    if (s == "bilinear") return DemosaicMode::Bilinear;
    throw Error(ErrorCode::InvalidConfig, "demosaic must be superpixel or bilinear");
}

Interp parse_lookup(const std::string& s) {
    if (s == "nearest") return Interp::Nearest;
    if (s == "bilinear") return Interp::Bilinear;
    throw Error(ErrorCode::InvalidConfig, "lookup must be nearest or bilinear");
}

void PipelineConfig::validate() const {
    if (frames.empty()) throw Error(ErrorCode::InvalidConfig, "no input frames");
    if (jobs < 1) throw Error(ErrorCode::InvalidConfig, "jobs must be >= 1");
    if (stages.fuse && !(stages.depth && stages.dolp)) {
        throw Error(ErrorCode::InvalidConfig, "fuse stage requires the depth and dolp stages");
    }
    if (!(params.delta >= 0.0 && params.delta <= 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "delta must lie in [0, 1]");
    }
    for (const auto& f : frames) {
        auto need = [&](const std::optional<fs::path>& p, const char* what, const char* stage) {
            if (!p) {
                throw Error(ErrorCode::InvalidConfig,
                            "frame '" + f.name + "': stage " + stage + " needs input '" + what + "'");
            }
        };
        if (stages.depth || stages.fuse) {
            need(f.left, "left", stages.depth ? "depth" : "fuse");
            need(f.right, "right", stages.depth ? "depth" : "fuse");
        }
        if (stages.dolp || stages.fuse) need(f.mosaic, "mosaic", stages.dolp ? "dolp" : "fuse");
        if (stages.unwrap) need(f.annular, "annular", "unwrap");
        if (stages.fuse) need(f.labels, "labels", "fuse");
    }
}

PipelineConfig parse_pipeline_config(const json& j, const fs::path& base_dir) {
    return guarded(ErrorCode::InvalidConfig, "pipeline config", [&] {
        auto resolve = [&](const std::string& p) {
            const fs::path path(p);
            return path.is_absolute() ? path : base_dir / path;
        };
        auto parse_frame = [&](const json& f, std::string fallback_name) {
            FrameInputs in;
            in.name = value_or(f, "name", std::move(fallback_name));
            auto opt = [&](const char* key) -> std::optional<fs::path> {
                if (!f.contains(key) || f.at(key).is_null()) return std::nullopt;
                return resolve(f.at(key).get<std::string>());
            };
            in.left = opt("left");
            in.right = opt("right");
            in.mosaic = opt("mosaic");
            in.annular = opt("annular");
            in.labels = opt("labels");
            return in;
        };

        PipelineConfig c;
        c.calibration = resolve(j.at("calibration").get<std::string>());
        if (j.contains("class_table")) c.class_table = resolve(j.at("class_table").get<std::string>());
        if (j.contains("frames")) {
            int i = 0;
            for (const json& f : j.at("frames")) c.frames.push_back(parse_frame(f, "frame" + std::to_string(i++)));
        } else if (j.contains("inputs")) {
            c.frames.push_back(parse_frame(j.at("inputs"), "frame"));
        }
        if (j.contains("stages")) {
            const json& s = j.at("stages");
            c.stages.depth = value_or(s, "depth", true);
            c.stages.dolp = value_or(s, "dolp", true);
            c.stages.unwrap = value_or(s, "unwrap", true);
            c.stages.fuse = value_or(s, "fuse", true);
        }
        if (j.contains("params")) {
            const json& p = j.at("params");
            PipelineParams& q = c.params;
            q.match.block_radius = value_or(p, "block_radius", q.match.block_radius);
            q.match.min_disparity = value_or(p, "min_disparity", q.match.min_disparity);
            q.match.max_disparity = value_or(p, "max_disparity", q.match.max_disparity);
            q.match.texture_threshold = value_or(p, "texture_threshold", q.match.texture_threshold);
            q.z_min = value_or(p, "z_min", q.z_min);
            q.z_max = value_or(p, "z_max", q.z_max);
            q.delta = value_or(p, "delta", q.delta);
            if (p.contains("demosaic")) q.demosaic = parse_demosaic(p.at("demosaic").get<std::string>());
            if (p.contains("lookup")) q.lookup = parse_lookup(p.at("lookup").get<std::string>());
            q.dolp_epsilon = value_or(p, "dolp_epsilon", q.dolp_epsilon);
            q.unwrap_width = value_or(p, "unwrap_width", q.unwrap_width);
            if (p.contains("fill_depth")) q.fill_depth = parse_fill_depth(p.at("fill_depth").get<std::string>());
            q.overlay_alpha = value_or(p, "overlay_alpha", q.overlay_alpha);
        }
        c.output_dir = resolve(value_or<std::string>(j, "output_dir", "out"));
        c.jobs = value_or(j, "jobs", 1);
        return c;
    });
}

PipelineConfig load_pipeline_config(const fs::path& path) {
    return parse_pipeline_config(read_json_file(path), path.parent_path());
}

json to_json(const PipelineConfig& c) {
    json frames = json::array();
    for (const auto& f : c.frames) {
        json jf{{"name", f.name}};
        auto put = [&](const char* key, const std::optional<fs::path>& p) {
            if (p) jf[key] = p->string();
        };
        put("left", f.left);
        put("right", f.right);
        put("mosaic", f.mosaic);
        put("annular", f.annular);
        put("labels", f.labels);
        frames.push_back(jf);
    }
    const PipelineParams& q = c.params;
    json j{{"calibration", c.calibration.string()},
           {"frames", frames},
           {"stages", {{"depth", c.stages.depth}, {"dolp", c.stages.dolp}, {"unwrap", c.stages.unwrap}, {"fuse", c.stages.fuse}}},
           {"params",
            {{"block_radius", q.match.block_radius},
             {"min_disparity", q.match.min_disparity},
             {"max_disparity", q.match.max_disparity},
             {"texture_threshold", q.match.texture_threshold},
             {"z_min", q.z_min},
             {"z_max", q.z_max},
             {"delta", q.delta},
             {"demosaic", q.demosaic == DemosaicMode::Superpixel ? "superpixel" : "bilinear"},
             {"lookup", q.lookup == Interp::Nearest ? "nearest" : "bilinear"},
             {"dolp_epsilon", q.dolp_epsilon},
             {"unwrap_width", q.unwrap_width},
             {"fill_depth", q.fill_depth > 0 ? "median:" + std::to_string(q.fill_depth) : "none"},
             {"overlay_alpha", q.overlay_alpha}}},
           {"output_dir", c.output_dir.string()},
           {"jobs", c.jobs}};
    if (c.class_table) j["class_table"] = c.class_table->string();
    return j;
}

}  // namespace polyfuse
