#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "polyfuse/fusion.hpp"
#include "polyfuse/geometry.hpp"
#include "polyfuse/panoramic.hpp"
#include "polyfuse/polarization.hpp"
#include "polyfuse/synth.hpp"

namespace polyfuse {

using nlohmann::json;

/// Rig calibration as loaded from disk. Rotations are re-orthonormalised on
/// load and the redundant baseline must agree with |T_left_to_right.t|.
struct CalibrationFile {
    CameraIntrinsics K_left;
    CameraIntrinsics K_right;
    /// Full mosaic resolution.
    CameraIntrinsics K_polar;
    RigidTransform T_left_to_right;
    RigidTransform T_left_to_polar;
    double baseline = 0.0;
    std::optional<PalModel> pal;
    MosaicLayout layout;
};

CalibrationFile parse_calibration(const json& j);
CalibrationFile load_calibration(const std::filesystem::path& path);
json to_json(const CalibrationFile& calib);

ClassTable parse_class_table(const json& j);
ClassTable load_class_table(const std::filesystem::path& path);
json to_json(const ClassTable& table);

/// A scene file may start from {"preset": {"name": "street", "width": W,
/// "height": H, "identity_polar": bool}} and override individual fields.
synth::SceneSpec parse_scene(const json& j);
synth::SceneSpec load_scene(const std::filesystem::path& path);
json to_json(const synth::SceneSpec& spec);

json to_json(const CameraIntrinsics& K);
json to_json(const RigidTransform& T);
json to_json(const PalModel& m);
CameraIntrinsics parse_intrinsics(const json& j);
/// Cleans R with nearest_rotation (correction limit 1e-6).
RigidTransform parse_transform(const json& j);
PalModel parse_pal(const json& j);

struct FrameInputs {
    std::string name = "frame";
    std::optional<std::filesystem::path> left, right, mosaic, annular, labels;
};

struct StageToggles {
    bool depth = true;
    bool dolp = true;
    bool unwrap = true;
    bool fuse = true;
};

struct PipelineParams {
    MatchParams match;
    double z_min = 0.15;
    double z_max = 12.0;
    double delta = 0.6;
    DemosaicMode demosaic = DemosaicMode::Superpixel;
    Interp lookup = Interp::Nearest;
    double dolp_epsilon = kDefaultDolpEpsilon;
    /// 0 selects the mid-annulus circumference.
    int unwrap_width = 0;
    /// k of the k x k median depth infill before fusion; 0 disables it.
    int fill_depth = 0;
    double overlay_alpha = 0.5;
};

struct PipelineConfig {
    std::filesystem::path calibration;
    std::optional<std::filesystem::path> class_table;
    std::vector<FrameInputs> frames;
    StageToggles stages;
    PipelineParams params;
    std::filesystem::path output_dir = "out";
    int jobs = 1;

    /// Throws InvalidConfig when an enabled stage lacks its inputs.
    void validate() const;
};

/// Relative paths resolve against `base_dir`.
PipelineConfig parse_pipeline_config(const json& j, const std::filesystem::path& base_dir);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
json to_json(const PipelineConfig& config);

/// Parses "median:k".
int parse_fill_depth(const std::string& spec);
DemosaicMode parse_demosaic(const std::string& s);
Interp parse_lookup(const std::string& s);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& j);

}  // namespace polyfuse
