// polyfuse command-line front end: run, bench, synth, unwrap.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "polyfuse/config.hpp"
#include "polyfuse/io.hpp"
#include "polyfuse/pipeline.hpp"
#include "polyfuse/synth.hpp"

namespace fs = std::filesystem;
using namespace polyfuse;

namespace {

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("polyfuse");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("POLYFUSE_LOG")) {
        const std::string level = env;
        if (level == "error" || level == "warn" || level == "info" || level == "debug") {
            spdlog::set_level(spdlog::level::from_str(level));
        } else {
            spdlog::warn("ignoring POLYFUSE_LOG={} (expected error, warn, info or debug)", level);
        }
    }
}

std::pair<int, int> parse_resolution(const std::string& s) {
    const auto x = s.find('x');
    try {
        if (x == std::string::npos) throw std::invalid_argument(s);
        const int w = std::stoi(s.substr(0, x));
        const int h = std::stoi(s.substr(x + 1));
        if (w < 16 || h < 16) throw std::invalid_argument(s);
        return {w, h};
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidConfig, "resolution must look like 640x480");
    }
}

struct RunOptions {
    std::string config;
    std::optional<double> delta;
    std::optional<std::string> demosaic, lookup, fill_depth, output;
    std::optional<int> jobs;
};

int cmd_run(const RunOptions& o) {
    PipelineConfig config = load_pipeline_config(o.config);
    if (o.delta) config.params.delta = *o.delta;
    if (o.demosaic) config.params.demosaic = parse_demosaic(*o.demosaic);
    if (o.lookup) config.params.lookup = parse_lookup(*o.lookup);
    if (o.fill_depth) config.params.fill_depth = parse_fill_depth(*o.fill_depth);
    if (o.jobs) config.jobs = *o.jobs;
    if (o.output) config.output_dir = *o.output;

    const RunSummary summary = run_pipeline(config);
    for (const auto& e : summary.errors) std::cerr << "error: " << e << '\n';
    if (summary.exit_code == kExitOk) {
        std::cout << "processed " << summary.frames_ok << " frame(s) into " << config.output_dir.string() << '\n';
    }
    return summary.exit_code;
}

int cmd_bench(const std::string& resolution, int frames, const std::string& json_out) {
    const auto [w, h] = parse_resolution(resolution);
    const BenchReport r = benchmark(PipelineParams{}, w, h, frames);
    std::cout << "resolution " << w << "x" << h << ", " << r.frames << " frames\n";
    for (const auto& [name, s] : r.stages) {
        std::cout << fmt::format("  {:<7} mean {:8.2f} ms  median {:8.2f} ms  p95 {:8.2f} ms\n", name, s.mean_ms,
                                 s.median_ms, s.p95_ms);
    }
    std::cout << fmt::format("  {:<7} mean {:8.2f} ms  median {:8.2f} ms  p95 {:8.2f} ms\n", "total", r.total.mean_ms,
                             r.total.median_ms, r.total.p95_ms);
    std::cout << fmt::format("FPS {:.2f}\n", r.fps);
    if (!json_out.empty()) write_json_file(json_out, to_json(r));
    return kExitOk;
}

int cmd_synth(const std::string& scene_path, const std::string& resolution, const fs::path& out) {
    synth::SceneSpec spec;
    if (!scene_path.empty()) {
        spec = load_scene(scene_path);
    } else {
        const auto [w, h] = parse_resolution(resolution);
        spec = synth::street_scene(w, h);
    }
    const ClassTable table = ClassTable::defaults();
    fs::create_directories(out);
    auto path = [&](const char* name) { return (out / name).string(); };

    const synth::StereoRender stereo = synth::render_stereo(spec, table);
    io::write_png(path("left.png"), io::to_image8(stereo.left, true));
    io::write_png(path("right.png"), io::to_image8(stereo.right, true));
    io::write_png(path("labels.png"), stereo.labels);
    io::write_png(path("depth_gt.png"), io::encode_depth_mm(stereo.depth));

    const synth::MosaicRender mosaic = synth::render_mosaic(spec);
    io::write_mosaic(path("mosaic.png"), mosaic.mosaic);
    io::write_png(path("dolp_gt.png"), io::encode_dolp_gray(mosaic.dolp));

    json frame{{"name", "frame"}, {"left", "left.png"}, {"right", "right.png"}, {"mosaic", "mosaic.png"},
               {"labels", "labels.png"}};
    const bool has_pal = spec.rig.pal.has_value();
    if (has_pal) {
        io::write_png(path("annular.png"), synth::render_annulus(spec));
        frame["annular"] = "annular.png";
    }

    write_json_file(out / "calibration.json", to_json(calibration_from_scene(spec)));
    write_json_file(out / "class_table.json", to_json(table));
    write_json_file(out / "scene.json", to_json(spec));
    const json config{{"calibration", "calibration.json"},
                      {"class_table", "class_table.json"},
                      {"frames", json::array({frame})},
                      {"stages", {{"depth", true}, {"dolp", true}, {"unwrap", has_pal}, {"fuse", true}}},
                      {"output_dir", "out"}};
    write_json_file(out / "config.json", config);
    std::cout << "wrote synthetic frame set to " << out.string() << '\n';
    return kExitOk;
}

int cmd_unwrap(const std::string& calib_path, const std::string& in, const std::string& out, int width,
               const std::string& map_out) {
    const CalibrationFile calib = load_calibration(calib_path);
    if (!calib.pal) throw Error(ErrorCode::InvalidCalibration, "calibration has no PAL parameters");
    const PalModel& model = *calib.pal;
    const UnwrapMapping map = build_unwrap(model, width > 0 ? width : default_unwrap_width(model));
    const Image8 annular = io::read_png(in, 3);
    io::write_png(out, unwrap_image(annular, map, Interp::Bilinear, std::uint8_t{0}));
    if (!map_out.empty()) save_unwrap_table(map_out, map);
    std::cout << "unwrapped " << annular.width() << "x" << annular.height() << " -> " << map.out_width << "x"
              << map.out_height << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();

    CLI::App app{"polyfuse: stereo depth, polarization, panoramic unwrap and water-hazard fusion"};
    app.require_subcommand(1);

    RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "Run the pipeline described by a config file");
    run_cmd->add_option("--config", run.config, "Pipeline config JSON")->required();
    run_cmd->add_option("--delta", run.delta, "DoLP threshold for water hazards")->check(CLI::Range(0.0, 1.0));
    run_cmd->add_option("--demosaic", run.demosaic, "superpixel|bilinear");
    run_cmd->add_option("--lookup", run.lookup, "nearest|bilinear");
    run_cmd->add_option("--jobs", run.jobs, "Frames processed concurrently")->check(CLI::PositiveNumber);
    run_cmd->add_option("--fill-depth", run.fill_depth, "Depth infill before fusion, e.g. median:5");
    run_cmd->add_option("--out", run.output, "Override the output directory");

    std::string resolution = "640x480";
    int frames = 20;
    std::string bench_json;
    auto* bench_cmd = app.add_subcommand("bench", "Time the full pipeline on synthetic frames");
    bench_cmd->add_option("--resolution", resolution, "WxH, e.g. 320x240 or 640x480")->required();
    bench_cmd->add_option("--frames", frames, "Timed frames (>= 10)");
    bench_cmd->add_option("--json", bench_json, "Also write the report as JSON");

    std::string scene, synth_res = "640x480", synth_out;
    auto* synth_cmd = app.add_subcommand("synth", "Render a synthetic frame set with ground truth");
    synth_cmd->add_option("--scene", scene, "Scene JSON (defaults to the street preset)");
    synth_cmd->add_option("--resolution", synth_res, "Preset resolution when no scene is given");
    synth_cmd->add_option("--out", synth_out, "Output directory")->required();

    std::string calib, in_png, out_png, map_out;
    int width = 0;
    auto* unwrap_cmd = app.add_subcommand("unwrap", "Unwrap an annular PAL image");
    unwrap_cmd->add_option("--calib", calib, "Calibration JSON with PAL parameters")->required();
    unwrap_cmd->add_option("--in", in_png, "Annular PNG")->required();
    unwrap_cmd->add_option("--out", out_png, "Unwrapped PNG")->required();
    unwrap_cmd->add_option("--width", width, "Output width (default: mid-annulus circumference)");
    unwrap_cmd->add_option("--map-out", map_out, "Also save the lookup table (PALW binary)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run_cmd) return cmd_run(run);
        if (*bench_cmd) return cmd_bench(resolution, frames, bench_json);
        if (*synth_cmd) return cmd_synth(scene, synth_res, synth_out);
        if (*unwrap_cmd) return cmd_unwrap(calib, in_png, out_png, width, map_out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    }
    return kExitConfig;
}
