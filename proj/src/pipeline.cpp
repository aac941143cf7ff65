#include "polyfuse/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>

#include <spdlog/spdlog.h>

#include "polyfuse/io.hpp"

namespace polyfuse {

namespace fs = std::filesystem;

int exit_code_for(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Io: return kExitIo;
        case ErrorCode::InvalidConfig:
        case ErrorCode::InvalidCalibration:
        case ErrorCode::InvalidScene:
        case ErrorCode::InvalidThreshold:
        case ErrorCode::InvalidIntrinsics:
        case ErrorCode::InvalidRotation:
        case ErrorCode::InvalidModel:
            return kExitConfig;
        default: return kExitProcessing;
    }
}

StageError::StageError(std::string stage, const Error& cause)
    : Error(cause.code(), "stage " + stage + ": " + cause.what()), stage_(std::move(stage)) {}

PipelineContext::PipelineContext(CalibrationFile calib, ClassTable table, PipelineParams params, StageToggles stages)
    : calib_(std::move(calib)), table_(std::move(table)), params_(std::move(params)), stages_(stages) {
    if (stages_.depth) rect_ = build_rectification(calib_.K_left, calib_.K_right, calib_.T_left_to_right);
    if (stages_.unwrap) {
        if (!calib_.pal) throw Error(ErrorCode::InvalidCalibration, "unwrap stage needs PAL parameters");
        const int w = params_.unwrap_width > 0 ? params_.unwrap_width : default_unwrap_width(*calib_.pal);
        unwrap_ = build_unwrap(*calib_.pal, w);
    }
}

RegistrationRig PipelineContext::registration_rig() const {
    RegistrationRig rig;
    rig.K_color = calib_.K_left;
    rig.K_polar =
        params_.demosaic == DemosaicMode::Superpixel ? superpixel_intrinsics(calib_.K_polar) : calib_.K_polar;
    rig.T_color_to_polar = calib_.T_left_to_polar;
    return rig;
}

namespace {

using Clock = std::chrono::steady_clock;

GrayImage gray_of(const Image8& img) {
    if (img.channels() == 1) {
        GrayImage g(img.width(), img.height());
        for (std::size_t k = 0; k < g.size(); ++k) g.data()[k] = img.data()[k];
        return g;
    }
    return to_gray(img);
}

Image8 rgb_of(const Image8& img) {
    if (img.channels() == 3) return img;
    Image8 out(img.width(), img.height(), 3);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            for (int c = 0; c < 3; ++c) out(x, y, c) = img(x, y, 0);
        }
    }
    return out;
}

void require_size(const Image8& img, const CameraIntrinsics& K, const char* what) {
    if (img.width() != K.width || img.height() != K.height) {
        throw Error(ErrorCode::DimensionMismatch, std::string(what) + " image size does not match calibration");
    }
}

json plane_stats(const Plane& p) {
    std::vector<double> valid;
    valid.reserve(p.size());
    for (double v : p.data()) {
        if (is_valid(v)) valid.push_back(v);
    }
    json s{{"pixels", p.size()}, {"valid", valid.size()}};
    if (!valid.empty()) {
        const auto [lo, hi] = std::minmax_element(valid.begin(), valid.end());
        s["min"] = *lo;
        s["max"] = *hi;
        double sum = 0.0;
        for (double v : valid) sum += v;
        auto mid = valid.begin() + static_cast<std::ptrdiff_t>(valid.size() / 2);
        std::nth_element(valid.begin(), mid, valid.end());
        s["mean"] = sum / static_cast<double>(valid.size());
        s["median"] = *mid;
    }
    return s;
}

template <typename Fn>
void run_stage(const std::string& name, FrameResult& result, const StageCallback& on_stage, Fn&& fn) {
    const auto t0 = Clock::now();
    StageReport report;
    report.name = name;
    try {
        report.stats = fn();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(name, e);
    }
    report.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    result.stages.push_back(std::move(report));
    if (on_stage) {
        try {
            on_stage(name, result);
        } catch (const Error& e) {
            throw StageError(name, e);
        }
    }
}

}  // namespace

FrameResult process_frame(const PipelineContext& ctx, const FrameData& frame, const StageCallback& on_stage) {
    const CalibrationFile& calib = ctx.calibration();
    const PipelineParams& params = ctx.params();
    const StageToggles& stages = ctx.stages();
    FrameResult result;

    if (stages.depth) {
        run_stage("depth", result, on_stage, [&] {
            if (!frame.left || !frame.right) throw Error(ErrorCode::InvalidConfig, "missing stereo pair");
            require_size(*frame.left, calib.K_left, "left");
            require_size(*frame.right, calib.K_right, "right");
            const RectificationResult& rect = ctx.rectification();
            const GrayImage left = rectify_image(gray_of(*frame.left), rect.R_left, calib.K_left, rect.K_rect, 0.0f);
            const GrayImage right =
                rectify_image(gray_of(*frame.right), rect.R_right, calib.K_right, rect.K_rect, 0.0f);
            const DisparityMap disp = match_disparity(left, right, params.match);
            const DepthMap z_rect =
                disparity_to_depth(disp, rect.K_rect.fx, rect.baseline, params.z_min, params.z_max);
            result.depth = unrectify_depth(z_rect, rect.R_left, rect.K_rect, calib.K_left);
            json s = plane_stats(result.depth->z);
            s["disparity"] = plane_stats(disp.d);
            return s;
        });
    }

    if (stages.dolp) {
        run_stage("dolp", result, on_stage, [&] {
            if (!frame.mosaic) throw Error(ErrorCode::InvalidConfig, "missing mosaic");
            if (frame.mosaic->width() != calib.K_polar.width || frame.mosaic->height() != calib.K_polar.height) {
                throw Error(ErrorCode::DimensionMismatch, "mosaic size does not match K_polar");
            }
            result.polarization = process_mosaic(*frame.mosaic, params.demosaic, params.dolp_epsilon);
            return plane_stats(result.polarization->dolp);
        });
    }

    if (stages.unwrap) {
        run_stage("unwrap", result, on_stage, [&] {
            if (!frame.annular) throw Error(ErrorCode::InvalidConfig, "missing annular image");
            const UnwrapMapping& map = *ctx.unwrap_mapping();
            result.unwrapped = unwrap_image(*frame.annular, map, Interp::Bilinear, std::uint8_t{0});
            return json{{"width", map.out_width}, {"height", map.out_height}};
        });
    }

    if (stages.fuse) {
        run_stage("fuse", result, on_stage, [&] {
            if (!frame.labels || !frame.left) throw Error(ErrorCode::InvalidConfig, "missing labels or colour image");
            if (!result.depth || !result.polarization) {
                throw Error(ErrorCode::InvalidConfig, "fuse needs the depth and dolp stages");
            }
            validate_labels(*frame.labels, ctx.class_table());
            const DepthMap depth =
                params.fill_depth > 0 ? fill_depth_median(*result.depth, params.fill_depth) : *result.depth;
            const WaterParams wp{params.delta, params.lookup};
            result.fused = detect_water(*frame.labels, depth, result.polarization->dolp, ctx.registration_rig(),
                                        ctx.class_table(), wp);
            result.overlay =
                overlay_visualization(rgb_of(*frame.left), *result.fused, ctx.class_table(), params.overlay_alpha);
            const std::uint8_t water = ctx.class_table().id_of("water_hazard");
            std::size_t relabeled = 0, water_total = 0;
            for (std::size_t k = 0; k < result.fused->size(); ++k) {
                const std::uint8_t after = result.fused->data()[k];
                water_total += after == water;
                relabeled += after != frame.labels->data()[k];
            }
            return json{{"relabeled", relabeled}, {"water_hazard_pixels", water_total}};
        });
    }
    return result;
}

FrameData load_frame(const FrameInputs& inputs, const CalibrationFile& calib) {
    FrameData f;
    try {
        if (inputs.left) f.left = io::read_png(inputs.left->string());
        if (inputs.right) f.right = io::read_png(inputs.right->string());
        if (inputs.mosaic) f.mosaic = io::read_mosaic(inputs.mosaic->string(), calib.layout);
        if (inputs.annular) f.annular = io::read_png(inputs.annular->string(), 3);
        if (inputs.labels) f.labels = io::read_png(inputs.labels->string(), 1);
    } catch (const Error& e) {
        throw StageError("load", e);
    }
    return f;
}

void write_stage_artifacts(const fs::path& dir, const std::string& stage, const FrameResult& result,
                           const FrameData&) {
    auto path = [&](const char* name) { return (dir / name).string(); };
    if (stage == "depth" && result.depth) {
        io::write_png(path("depth.png"), io::encode_depth_mm(*result.depth));
    } else if (stage == "dolp" && result.polarization) {
        io::write_png(path("dolp.png"), io::encode_dolp_gray(result.polarization->dolp));
        io::write_png(path("dolp_color.png"), io::dolp_pseudocolor(result.polarization->dolp));
    } else if (stage == "unwrap" && result.unwrapped) {
        io::write_png(path("unwrapped.png"), *result.unwrapped);
    } else if (stage == "fuse" && result.fused) {
        io::write_png(path("labels_fused.png"), *result.fused);
        io::write_png(path("overlay.png"), *result.overlay);
    }
}

json report_json(const std::string& frame_name, const FrameResult& result) {
    json stages = json::array();
    for (const auto& s : result.stages) stages.push_back({{"name", s.name}, {"wall_ms", s.wall_ms}, {"stats", s.stats}});
    return {{"frame", frame_name}, {"stages", stages}};
}

RunSummary run_pipeline(const PipelineConfig& config) {
    RunSummary summary;
    std::optional<PipelineContext> ctx;
    try {
        config.validate();
        CalibrationFile calib = load_calibration(config.calibration);
        ClassTable table = config.class_table ? load_class_table(*config.class_table) : ClassTable::defaults();
        ctx.emplace(std::move(calib), std::move(table), config.params, config.stages);
        fs::create_directories(config.output_dir);
    } catch (const Error& e) {
        summary.exit_code = exit_code_for(e.code());
        summary.errors.push_back(e.what());
        return summary;
    } catch (const fs::filesystem_error& e) {
        summary.exit_code = kExitIo;
        summary.errors.push_back(e.what());
        return summary;
    }

    std::mutex mu;
    std::atomic<std::size_t> next{0};
    const bool nested = config.frames.size() > 1;

    auto worker = [&] {
        for (std::size_t i = next++; i < config.frames.size(); i = next++) {
            const FrameInputs& in = config.frames[i];
            const fs::path dir = nested ? config.output_dir / in.name : config.output_dir;
            FrameResult partial;
            int code = kExitOk;
            std::string message;
            try {
                fs::create_directories(dir);
                const FrameData data = load_frame(in, ctx->calibration());
                spdlog::info("frame '{}': processing", in.name);
                partial = process_frame(*ctx, data, [&](const std::string& stage, const FrameResult& r) {
                    write_stage_artifacts(dir, stage, r, data);
                    partial.stages = r.stages;
                    spdlog::debug("frame '{}': stage {} done in {:.1f} ms", in.name, stage, r.stages.back().wall_ms);
                });
            } catch (const Error& e) {
                code = exit_code_for(e.code());
                message = "frame '" + in.name + "': " + e.what();
            } catch (const fs::filesystem_error& e) {
                code = kExitIo;
                message = "frame '" + in.name + "': " + e.what();
            }
            try {
                json rep = report_json(in.name, partial);
                rep["status"] = code == kExitOk ? "ok" : "failed";
                if (code != kExitOk) rep["error"] = message;
                write_json_file(dir / "report.json", rep);
            } catch (const Error& e) {
                if (code == kExitOk) {
                    code = kExitIo;
                    message = e.what();
                }
            }
            std::lock_guard lock(mu);
            if (code == kExitOk) {
                ++summary.frames_ok;
            } else {
                ++summary.frames_failed;
                summary.errors.push_back(message);
                spdlog::error("{}", message);
                if (summary.exit_code == kExitOk) summary.exit_code = code;
            }
        }
    };

    const int jobs = std::min<int>(config.jobs, static_cast<int>(config.frames.size()));
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }
    return summary;
}

CalibrationFile calibration_from_scene(const synth::SceneSpec& spec) {
    CalibrationFile c;
    c.K_left = spec.rig.K_left;
    c.K_right = spec.rig.K_right;
    c.K_polar = spec.rig.K_polar;
    c.T_left_to_right = spec.rig.T_left_to_right;
    c.T_left_to_polar = spec.rig.T_left_to_polar;
    c.baseline = spec.rig.T_left_to_right.t.norm();
    if (spec.rig.pal) c.pal = spec.rig.pal->model;
    return c;
}

namespace {

LatencyStats summarize(std::vector<double> ms) {
    LatencyStats s;
    if (ms.empty()) return s;
    double sum = 0.0;
    for (double v : ms) sum += v;
    s.mean_ms = sum / static_cast<double>(ms.size());
    std::sort(ms.begin(), ms.end());
    const std::size_t n = ms.size();
    s.median_ms = n % 2 ? ms[n / 2] : 0.5 * (ms[n / 2 - 1] + ms[n / 2]);
    // Nearest-rank percentile.
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
    s.p95_ms = ms[std::clamp<std::size_t>(rank, 1, n) - 1];
    return s;
}

Image8 gray_to_image8(const GrayImage& g) { return io::to_image8(g, true); }

}  // namespace

BenchReport benchmark(const PipelineParams& params, int width, int height, int frames) {
    if (frames < 10) throw Error(ErrorCode::InvalidConfig, "benchmark needs at least 10 frames");
    synth::SceneSpec spec = synth::street_scene(width, height);
    spec.supersample = 1;
    const synth::StereoRender stereo = synth::render_stereo(spec);
    const synth::MosaicRender mosaic = synth::render_mosaic(spec);

    FrameData data;
    data.left = gray_to_image8(stereo.left);
    data.right = gray_to_image8(stereo.right);
    data.mosaic = mosaic.mosaic;
    data.annular = synth::render_annulus(spec);
    data.labels = stereo.labels;

    const PipelineContext ctx(calibration_from_scene(spec), ClassTable::defaults(), params, StageToggles{});
    process_frame(ctx, data);  // warm-up

    std::vector<std::string> names;
    std::vector<std::vector<double>> per_stage;
    std::vector<double> totals;
    for (int f = 0; f < frames; ++f) {
        const auto t0 = Clock::now();
        const FrameResult r = process_frame(ctx, data);
        totals.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
        if (names.empty()) {
            for (const auto& s : r.stages) names.push_back(s.name);
            per_stage.resize(names.size());
        }
        for (std::size_t k = 0; k < r.stages.size(); ++k) per_stage[k].push_back(r.stages[k].wall_ms);
    }

    BenchReport report;
    report.width = width;
    report.height = height;
    report.frames = frames;
    for (std::size_t k = 0; k < names.size(); ++k) report.stages.emplace_back(names[k], summarize(per_stage[k]));
    report.total = summarize(totals);
    report.fps = report.total.mean_ms > 0.0 ? 1000.0 / report.total.mean_ms : 0.0;
    return report;
}

json to_json(const BenchReport& r) {
    auto lat = [](const LatencyStats& s) {
        return json{{"mean_ms", s.mean_ms}, {"median_ms", s.median_ms}, {"p95_ms", s.p95_ms}};
    };
    json stages = json::object();
    for (const auto& [name, s] : r.stages) stages[name] = lat(s);
    return {{"resolution", std::to_string(r.width) + "x" + std::to_string(r.height)},
            {"frames", r.frames},
            {"stages", stages},
            {"total", lat(r.total)},
            {"fps", r.fps}};
}

}  // namespace polyfuse
