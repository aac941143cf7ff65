#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "polyfuse/config.hpp"
#include "polyfuse/io.hpp"
#include "polyfuse/pipeline.hpp"
#include "polyfuse/synth.hpp"

using namespace polyfuse;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("polyfuse_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Writes a small street frame set to `dir` and returns the config JSON.
json write_frame_set(const fs::path& dir, int w, int h) {
    const synth::SceneSpec spec = synth::street_scene(w, h);
    const ClassTable table = ClassTable::defaults();
    const auto st = synth::render_stereo(spec, table);
    io::write_png((dir / "left.png").string(), io::to_image8(st.left, true));
    io::write_png((dir / "right.png").string(), io::to_image8(st.right, true));
    io::write_png((dir / "labels.png").string(), st.labels);
    io::write_mosaic((dir / "mosaic.png").string(), synth::render_mosaic(spec).mosaic);
    io::write_png((dir / "annular.png").string(), synth::render_annulus(spec));
    write_json_file(dir / "calibration.json", to_json(calibration_from_scene(spec)));
    return {{"calibration", "calibration.json"},
            {"frames",
             json::array({{{"name", "f0"},
                           {"left", "left.png"},
                           {"right", "right.png"},
                           {"mosaic", "mosaic.png"},
                           {"annular", "annular.png"},
                           {"labels", "labels.png"}}})},
            {"output_dir", "out"}};
}

}  // namespace

TEST_CASE("fill-depth and enum parsing") {
    CHECK(parse_fill_depth("median:5") == 5);
    CHECK(parse_fill_depth("none") == 0);
    CHECK_THROWS_AS(parse_fill_depth("median:4"), Error);
    CHECK_THROWS_AS(parse_fill_depth("mean:3"), Error);
    CHECK(parse_demosaic("bilinear") == DemosaicMode::Bilinear);
    CHECK(parse_lookup("nearest") == Interp::Nearest);
    CHECK_THROWS_AS(parse_lookup("cubic"), Error);
}

TEST_CASE("calibration round trip and validation") {
    const CalibrationFile c = calibration_from_scene(synth::street_scene(160, 120));
    const CalibrationFile back = parse_calibration(to_json(c));
    CHECK(back.baseline == doctest::Approx(0.12));
    CHECK(back.K_left.fx == c.K_left.fx);
    CHECK((back.T_left_to_polar.R - c.T_left_to_polar.R).norm() < 1e-12);
    REQUIRE(back.pal);
    CHECK(back.pal->center.u == c.pal->center.u);

    json j = to_json(c);
    j["baseline"] = 0.2;
    try {
        parse_calibration(j);
        FAIL("baseline mismatch accepted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidCalibration);
        CHECK(exit_code_for(e.code()) == kExitConfig);
    }
    j = to_json(c);
    j["T_left_to_right"]["R"][0][0] = 5.0;
    CHECK_THROWS_AS(parse_calibration(j), Error);
    j = to_json(c);
    j["K_left"]["fx"] = -1;
    CHECK_THROWS_AS(parse_calibration(j), Error);
}

TEST_CASE("class table parsing") {
    const ClassTable t = parse_class_table(to_json(ClassTable::defaults()));
    CHECK(t.id_of("road") == ClassTable::defaults().id_of("road"));
    CHECK(t.id_of("water_hazard") == 19);
    json j = to_json(ClassTable::defaults());
    j["classes"].push_back(j["classes"][0]);
    CHECK_THROWS_AS(parse_class_table(j), Error);
}

TEST_CASE("pipeline config parsing and validation") {
    const json j{{"calibration", "calib.json"},
                 {"frames", json::array({{{"left", "l.png"}, {"right", "r.png"}}})},
                 {"stages", {{"depth", true}, {"dolp", false}, {"unwrap", false}, {"fuse", false}}},
                 {"params", {{"delta", 0.5}, {"fill_depth", "median:3"}}}};
    PipelineConfig c = parse_pipeline_config(j, "/base");
    CHECK(c.calibration == fs::path("/base/calib.json"));
    CHECK(*c.frames[0].left == fs::path("/base/l.png"));
    CHECK(c.params.delta == 0.5);
    CHECK(c.params.fill_depth == 3);
    CHECK_NOTHROW(c.validate());

    c.stages.fuse = true;
    CHECK_THROWS_AS(c.validate(), Error);
    c.stages.dolp = true;
    try {
        c.validate();
        FAIL("missing mosaic accepted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidConfig);
        CHECK(std::string(e.what()).find("mosaic") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_pipeline_config(json{{"frames", json::array()}}, "/"), Error);
}

TEST_CASE("depth PNG round trip within half a millimetre") {
    DepthMap d{Plane(7, 5)};
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 7; ++x) d.z(x, y) = 0.15 + 1.7 * x + 0.3173 * y;
    d.z(3, 2) = kInvalid;
    const fs::path dir = scratch("depth");
    io::write_png((dir / "d.png").string(), io::encode_depth_mm(d));
    const DepthMap back = io::decode_depth_mm(io::read_png16((dir / "d.png").string()));
    for (int y = 0; y < 5; ++y) {
        for (int x = 0; x < 7; ++x) {
            if (x == 3 && y == 2) {
                CHECK_FALSE(is_valid(back.z(x, y)));
            } else {
                CHECK(std::abs(back.z(x, y) - d.z(x, y)) <= 0.0005);
            }
        }
    }
}

TEST_CASE("mosaic PNG round trip") {
    MosaicFrame m;
    m.intensity = Plane(8, 6);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 8; ++x) m.intensity(x, y) = (x * 6 + y) / 47.0;
    const fs::path dir = scratch("mosaic");
    io::write_mosaic((dir / "m.png").string(), m);
    const MosaicFrame back = io::read_mosaic((dir / "m.png").string());
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 8; ++x) CHECK(std::abs(back.intensity(x, y) - m.intensity(x, y)) <= 0.5 / 65535 + 1e-12);
}

TEST_CASE("missing files are I/O errors") {
    try {
        io::read_png("/nonexistent/polyfuse.png");
        FAIL("read succeeded");
    } catch (const Error& e) {
        CHECK(exit_code_for(e.code()) == kExitIo);
    }
}

TEST_CASE("run on a small synthetic frame set") {
    const fs::path dir = scratch("run");
    write_json_file(dir / "config.json", write_frame_set(dir, 96, 72));
    const PipelineConfig config = load_pipeline_config(dir / "config.json");
    const RunSummary s = run_pipeline(config);
    CHECK(s.exit_code == kExitOk);
    CHECK(s.frames_ok == 1);
    for (const char* name :
         {"depth.png", "dolp.png", "dolp_color.png", "unwrapped.png", "labels_fused.png", "overlay.png", "report.json"}) {
        CHECK_MESSAGE(fs::exists(dir / "out" / name), name);
    }
    const json rep = read_json_file(dir / "out" / "report.json");
    CHECK(rep.at("status") == "ok");
    CHECK(rep.at("stages").size() == 4);
}

TEST_CASE("disabled stages write nothing") {
    const fs::path dir = scratch("gating");
    json cfg = write_frame_set(dir, 64, 48);
    cfg["stages"] = {{"depth", true}, {"dolp", false}, {"unwrap", false}, {"fuse", false}};
    write_json_file(dir / "config.json", cfg);
    const RunSummary s = run_pipeline(load_pipeline_config(dir / "config.json"));
    CHECK(s.exit_code == kExitOk);
    CHECK(fs::exists(dir / "out" / "depth.png"));
    CHECK_FALSE(fs::exists(dir / "out" / "dolp.png"));
    CHECK_FALSE(fs::exists(dir / "out" / "overlay.png"));
}

TEST_CASE("run failures map to exit codes") {
    const fs::path dir = scratch("fail");
    json cfg = write_frame_set(dir, 64, 48);
    cfg["frames"][0].erase("mosaic");
    write_json_file(dir / "config.json", cfg);
    CHECK(run_pipeline(load_pipeline_config(dir / "config.json")).exit_code == kExitConfig);

    cfg = write_frame_set(dir, 64, 48);
    cfg["frames"][0]["left"] = "missing.png";
    write_json_file(dir / "config.json", cfg);
    const RunSummary s = run_pipeline(load_pipeline_config(dir / "config.json"));
    CHECK(s.exit_code == kExitIo);
    CHECK(s.frames_failed == 1);
}
