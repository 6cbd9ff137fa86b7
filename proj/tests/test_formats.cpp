#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "geff/dataset.hpp"
#include "geff/export.hpp"
#include "geff/image_io.hpp"
#include "geff/ply_io.hpp"
#include "geff/synthetic_world.hpp"
#include "geff/trainer.hpp"

using namespace geff;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    const fs::path dir = fs::temp_directory_path() / "geff_fmt_tests";
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("8-bit RGB PNG round-trips pixel-exactly") {
    Rng rng(1);
    const int w = 37, h = 23;  // deliberately non-square, odd sizes
    std::vector<std::uint8_t> rgb(static_cast<std::size_t>(w) * h * 3);
    for (auto& v : rgb) v = static_cast<std::uint8_t>(rng.uniform_index(256));
    const auto path = (temp_dir() / "rt_rgb.png").string();
    write_png_rgb8(path, w, h, rgb);
    const PngImage img = read_png(path);
    CHECK(img.width == w);
    CHECK(img.height == h);
    CHECK(img.channels == 3);
    CHECK(img.bit_depth == 8);
    for (std::size_t i = 0; i < rgb.size(); ++i) CHECK(img.pixels[i] == rgb[i]);
}

TEST_CASE("16-bit grayscale PNG round-trips pixel-exactly") {
    Rng rng(2);
    const int w = 31, h = 17;
    std::vector<std::uint16_t> gray(static_cast<std::size_t>(w) * h);
    for (auto& v : gray) v = static_cast<std::uint16_t>(rng.uniform_index(65536));
    const auto path = (temp_dir() / "rt_gray16.png").string();
    write_png_gray16(path, w, h, gray);
    const PngImage img = read_png(path);
    CHECK(img.channels == 1);
    CHECK(img.bit_depth == 16);
    for (std::size_t i = 0; i < gray.size(); ++i) CHECK(img.pixels[i] == gray[i]);
}

TEST_CASE("PNG reader rejects non-PNG data") {
    const auto path = (temp_dir() / "not_a_png.png").string();
    std::ofstream(path) << "definitely not a png";
    CHECK_THROWS_AS(read_png(path), ParseError);
    CHECK_THROWS_AS(read_png((temp_dir() / "missing.png").string()), IoError);
}

TEST_CASE("16-bit PGM round-trips through the reader") {
    Rng rng(3);
    const int w = 12, h = 9;
    std::vector<std::uint16_t> gray(static_cast<std::size_t>(w) * h);
    for (auto& v : gray) v = static_cast<std::uint16_t>(rng.uniform_index(65536));
    const auto path = (temp_dir() / "rt.pgm").string();
    write_pgm16(path, w, h, gray);
    const PgmImage img = read_pgm(path);
    CHECK(img.maxval == 65535);
    for (std::size_t i = 0; i < gray.size(); ++i) CHECK(img.pixels[i] == gray[i]);
}

TEST_CASE("frame dataset round-trips within format precision") {
    const AnalyticScene scene = random_scene(8, {3, true});
    const TeacherModel teacher = TeacherModel::create(scene.class_names, 16, 0.05, 8, 1);
    GtRenderOptions opts;
    opts.feature_seed = 4;
    const PosedFrame frame =
        render_ground_truth_frame(scene, square_intrinsics(48, 48),
                                  ring_pose(2.0, 1.0, 1.3, Vec3(0, 0, 0.25)), teacher, opts);
    const auto dir = (temp_dir() / "dataset").string();
    save_frame(dir, 0, frame);
    const PosedFrame loaded = load_frame(dir, 0);

    CHECK(loaded.width == frame.width);
    CHECK(loaded.intrinsics.fx == frame.intrinsics.fx);
    CHECK((loaded.pose.translation - frame.pose.translation).norm() < 1e-12);
    // Depth quantized to millimeters.
    for (std::size_t i = 0; i < frame.depth.size(); ++i)
        CHECK(std::abs(loaded.depth[i] - frame.depth[i]) <= 5.1e-4);
    // Color quantized to 8 bits.
    for (std::size_t i = 0; i < frame.color.size(); ++i)
        CHECK(std::abs(loaded.color[i] - frame.color[i]) <= 0.5f / 255.f + 1e-6f);
    // Teacher features are float32 exact.
    REQUIRE(loaded.teacher_dim == frame.teacher_dim);
    CHECK(loaded.teacher_features == frame.teacher_features);

    CHECK(count_frames(dir) == 1);
}

TEST_CASE("dataset loader validates the pose and feature header") {
    const auto dir = (temp_dir() / "bad_dataset").string();
    fs::create_directories(dir);
    std::ofstream(dir + "/frame_000000.json")
        << R"({"intrinsics": {"fx": 10, "fy": 10, "cx": 1, "cy": 1, "width": 4, "height": 4},
             "camera_to_world": [2,0,0,0, 0,1,0,0, 0,0,1,0, 0,0,0,1]})";
    // Scaled rotation must be rejected before image loading happens.
    CHECK_THROWS_AS(load_frame(dir, 0), ParseError);
}

TEST_CASE("PCA coloring maps distinct clusters to distinct colors") {
    Rng rng(5);
    Tensor feats(60, 16);
    for (int i = 0; i < 60; ++i) {
        const int cls = i < 30 ? 0 : 5;
        for (int k = 0; k < 16; ++k)
            feats.at(i, k) = (k == cls ? 1.0 : 0.0) + 0.01 * rng.normal();
    }
    const auto colors = pca_colors(feats);
    REQUIRE(colors.size() == 180);
    // Means of the two groups differ strongly in the first component.
    double mean_a = 0, mean_b = 0;
    for (int i = 0; i < 30; ++i) mean_a += colors[i * 3];
    for (int i = 30; i < 60; ++i) mean_b += colors[i * 3];
    CHECK(std::abs(mean_a - mean_b) / 30.0 > 100.0);
}

TEST_CASE("grid exports write valid PGM/PPM files") {
    DecodedPointCloud dpc;
    Rng rng(6);
    dpc.features = Tensor(100, 8);
    for (int i = 0; i < 100; ++i) {
        dpc.points.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1), 0.5);
        dpc.features.at(i, i % 8) = 1.0;
        dpc.sdf.push_back(0.0);
    }
    const OccupancyGrid grid = project_to_grid(dpc);
    const auto occ = (temp_dir() / "grid_occ.pgm").string();
    const auto cost = (temp_dir() / "grid_cost.pgm").string();
    export_grid_pgm(occ, grid);
    export_cost_pgm(cost, grid);
    const PgmImage occ_img = read_pgm(occ);
    CHECK(occ_img.width == grid.width);
    CHECK(occ_img.maxval == 255);
    const PgmImage cost_img = read_pgm(cost);
    CHECK(cost_img.maxval == 65535);
    for (auto v : cost_img.pixels) CHECK(v == 1000);  // unit cost everywhere

    const PlanResult plan = astar(grid, {0, 0}, {grid.width - 1, grid.height - 1});
    export_path_ppm((temp_dir() / "grid_path.ppm").string(), grid, plan);
    std::ifstream ppm(temp_dir() / "grid_path.ppm", std::ios::binary);
    std::string magic;
    ppm >> magic;
    CHECK(magic == "P6");
}

TEST_CASE("decoded cloud PLY export is parseable and complete") {
    DecodedPointCloud dpc;
    Rng rng(7);
    dpc.features = Tensor(50, 16);
    for (int i = 0; i < 50; ++i) {
        dpc.points.emplace_back(rng.normal(), rng.normal(), rng.normal());
        for (int k = 0; k < 16; ++k) dpc.features.at(i, k) = rng.normal();
        dpc.sdf.push_back(rng.normal(0, 0.01));
    }
    const auto path = (temp_dir() / "decoded.ply").string();
    export_decoded_cloud_ply(path, dpc);
    const PlyData ply = read_ply(path);
    CHECK(ply.vertex_count == 50);
    CHECK(ply.properties == std::vector<std::string>{"x", "y", "z", "sdf"});
    CHECK(ply.uchar_properties == std::vector<std::string>{"red", "green", "blue"});
    CHECK(ply.floats[0] == doctest::Approx(dpc.points[0].x()));
}

TEST_CASE("score PLY export stores the scores") {
    DecodedPointCloud dpc;
    dpc.points = {Vec3(0, 0, 0), Vec3(1, 1, 1)};
    dpc.features = Tensor(2, 4);
    dpc.features.at(0, 0) = 1;
    dpc.features.at(1, 1) = 1;
    dpc.sdf = {0, 0};
    const auto path = (temp_dir() / "scores.ply").string();
    export_score_ply(path, dpc, {0.9, 0.1});
    const PlyData ply = read_ply(path);
    CHECK(ply.floats[3] == doctest::Approx(0.9f));
    CHECK(ply.floats[7] == doctest::Approx(0.1f));
}
