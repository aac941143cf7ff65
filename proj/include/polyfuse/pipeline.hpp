#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "polyfuse/config.hpp"
#include "polyfuse/fusion.hpp"
#include "polyfuse/panoramic.hpp"
#include "polyfuse/polarization.hpp"
#include "polyfuse/stereo.hpp"
#include "polyfuse/synth.hpp"

namespace polyfuse {

/// CLI exit statuses.
enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitProcessing = 3, kExitIo = 4 };

int exit_code_for(ErrorCode code) noexcept;

/// Raised by process_frame; carries the stage that failed.
class StageError : public Error {
public:
    StageError(std::string stage, const Error& cause);
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

/// In-memory inputs of one frame. Colour images are RGB; gray ones are
/// accepted wherever RGB is.
struct FrameData {
    std::optional<Image8> left, right;
    std::optional<MosaicFrame> mosaic;
    std::optional<Image8> annular;
    std::optional<LabelMap> labels;
};

struct StageReport {
    std::string name;
    double wall_ms = 0.0;
    json stats = json::object();
};

struct FrameResult {
    std::optional<DepthMap> depth;
    std::optional<PolarizationFrame> polarization;
    std::optional<Image8> unwrapped;
    std::optional<LabelMap> fused;
    std::optional<Image8> overlay;
    std::vector<StageReport> stages;
};

/// Everything that is shared between frames: calibration, class table,
/// parameters and the precomputed rectification and unwrap tables.
class PipelineContext {
public:
    PipelineContext(CalibrationFile calib, ClassTable table, PipelineParams params, StageToggles stages);

    const CalibrationFile& calibration() const noexcept { return calib_; }
    const ClassTable& class_table() const noexcept { return table_; }
    const PipelineParams& params() const noexcept { return params_; }
    const StageToggles& stages() const noexcept { return stages_; }
    const RectificationResult& rectification() const noexcept { return rect_; }
    const std::optional<UnwrapMapping>& unwrap_mapping() const noexcept { return unwrap_; }
    /// Registration rig from colour pixels to the DoLP plane of the chosen demosaic mode.
    RegistrationRig registration_rig() const;

private:
    CalibrationFile calib_;
    ClassTable table_;
    PipelineParams params_;
    StageToggles stages_;
    RectificationResult rect_;
    std::optional<UnwrapMapping> unwrap_;
};

/// Called after each completed stage, e.g. to write its artifacts.
using StageCallback = std::function<void(const std::string& stage, const FrameResult& result)>;

/// Runs the enabled stages in dependency order. Throws StageError.
FrameResult process_frame(const PipelineContext& ctx, const FrameData& frame, const StageCallback& on_stage = {});

/// Loads the frame's inputs from disk (I/O errors are reported as stage "load").
FrameData load_frame(const FrameInputs& inputs, const CalibrationFile& calib);

/// Writes the artifacts produced by `stage` into `dir`.
void write_stage_artifacts(const std::filesystem::path& dir, const std::string& stage, const FrameResult& result,
                           const FrameData& frame);

json report_json(const std::string& frame_name, const FrameResult& result);

struct RunSummary {
    int exit_code = kExitOk;
    int frames_ok = 0;
    int frames_failed = 0;
    std::vector<std::string> errors;
};

/// Validates, then processes every frame (up to `jobs` concurrently). Each
/// frame writes into its own directory; a single frame writes into
/// output_dir directly.
RunSummary run_pipeline(const PipelineConfig& config);

CalibrationFile calibration_from_scene(const synth::SceneSpec& spec);

struct LatencyStats {
    double mean_ms = 0.0;
    double median_ms = 0.0;
    double p95_ms = 0.0;
};

struct BenchReport {
    int width = 0;
    int height = 0;
    int frames = 0;
    std::vector<std::pair<std::string, LatencyStats>> stages;
    LatencyStats total;
    double fps = 0.0;
};

/// Times the full pipeline on in-memory synthetic frames. Throws
/// InvalidConfig when frames < 10.
BenchReport benchmark(const PipelineParams& params, int width, int height, int frames);
json to_json(const BenchReport& report);

}  // namespace polyfuse
