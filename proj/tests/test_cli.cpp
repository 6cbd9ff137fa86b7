#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "geff/ply_io.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
    const char* env = std::getenv("GEFF_CLI");
    REQUIRE_MESSAGE(env != nullptr, "GEFF_CLI must point at the geff binary");
    return env;
}

struct RunResult {
    int exit_code = -1;
    std::string stdout_text;
};

RunResult run(const std::string& args) {
    const fs::path out = fs::temp_directory_path() / "geff_cli_stdout.txt";
    const std::string cmd = cli_path() + " " + args + " > " + out.string() + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    RunResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream f(out);
    std::stringstream ss;
    ss << f.rdbuf();
    result.stdout_text = ss.str();
    return result;
}

std::string slurp(const fs::path& path) {
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path work_dir() {
    const fs::path dir = fs::temp_directory_path() / "geff_cli_tests";
    fs::create_directories(dir);
    return dir;
}

// Shared tiny checkpoint so the slow path runs once.
std::string tiny_checkpoint() {
    static std::string path;
    if (path.empty()) {
        path = (work_dir() / "tiny.ckpt").string();
        const RunResult r = run("train --checkpoint " + path +
                                " --iters 10 --rays-per-batch 8 --samples-per-ray 6 "
                                "--sdf-samples 16 --eikonal-samples 8 --scenes 1 "
                                "--image-size 24 --seed 3");
        REQUIRE(r.exit_code == 0);
    }
    return path;
}

}  // namespace

TEST_CASE("synth writes a dataset and is deterministic under --seed") {
    const auto dir_a = (work_dir() / "ds_a").string();
    const auto dir_b = (work_dir() / "ds_b").string();
    const RunResult a =
        run("synth --out " + dir_a + " --seed 5 --objects 3 --frames 2 --image-size 24");
    REQUIRE(a.exit_code == 0);
    CHECK(fs::exists(dir_a + "/frame_000001_depth.png"));
    CHECK(fs::exists(dir_a + "/scene.json"));
    const RunResult b =
        run("synth --out " + dir_b + " --seed 5 --objects 3 --frames 2 --image-size 24");
    REQUIRE(b.exit_code == 0);
    CHECK(slurp(dir_a + "/scene.json") == slurp(dir_b + "/scene.json"));
    // Byte-identical primary outputs, PNGs compared as bytes too (same
    // encoder, same input).
    CHECK(slurp(dir_a + "/frame_000000_depth.png") == slurp(dir_b + "/frame_000000_depth.png"));
}

TEST_CASE("train writes a checkpoint and identical CSVs for one seed") {
    const auto csv_a = (work_dir() / "hist_a.csv").string();
    const auto csv_b = (work_dir() / "hist_b.csv").string();
    const auto ckpt = (work_dir() / "train_test.ckpt").string();
    const std::string base =
        " --iters 6 --rays-per-batch 8 --samples-per-ray 6 --sdf-samples 16 "
        "--eikonal-samples 8 --scenes 1 --image-size 24 --seed 11";
    const RunResult a = run("train --checkpoint " + ckpt + " --history " + csv_a + base);
    REQUIRE(a.exit_code == 0);
    CHECK(fs::exists(ckpt));
    const std::string summary = a.stdout_text;
    CHECK(summary.find("\"steps\": 6") != std::string::npos);

    const RunResult b = run("train --checkpoint " + ckpt + " --history " + csv_b + base);
    REQUIRE(b.exit_code == 0);
    const std::string hist_a = slurp(csv_a), hist_b = slurp(csv_b);
    CHECK(!hist_a.empty());
    CHECK(hist_a == hist_b);
    CHECK(hist_a.rfind("step,color,depth,sdf,eikonal,feature,total", 0) == 0);
}

TEST_CASE("missing config file exits 2 and names the path") {
    const RunResult r = run("train --config /nonexistent/geff.toml");
    CHECK(r.exit_code == 2);
}

TEST_CASE("unknown config keys are rejected") {
    const auto cfg = work_dir() / "bad.toml";
    std::ofstream(cfg) << "[train]\nnot_a_real_key = 3\n";
    const RunResult r = run("train --config " + cfg.string());
    CHECK(r.exit_code == 2);
}

TEST_CASE("a valid config file feeds subcommand options") {
    const auto cfg = work_dir() / "good.toml";
    const auto ckpt = (work_dir() / "cfg_train.ckpt").string();
    std::ofstream(cfg) << "[train]\niters = 4\nrays-per-batch = 8\nsamples-per-ray = 6\n"
                       << "sdf-samples = 12\neikonal-samples = 6\nscenes = 1\n"
                       << "image-size = 24\nseed = 2\ncheckpoint = \"" << ckpt << "\"\n";
    const RunResult r = run("train --config " + cfg.string());
    REQUIRE(r.exit_code == 0);
    CHECK(r.stdout_text.find("\"steps\": 4") != std::string::npos);
    CHECK(fs::exists(ckpt));
}

TEST_CASE("bench-depth runs baselines without a checkpoint") {
    const auto csv = (work_dir() / "bench_baseline.csv").string();
    const RunResult r = run("bench-depth --out " + csv + " --frames 2 --samples-per-ray 16");
    REQUIRE(r.exit_code == 0);
    const std::string text = slurp(csv);
    CHECK(text.find("nearest") != std::string::npos);
    CHECK(text.find("bilinear") != std::string::npos);
    CHECK(text.find("geff") == std::string::npos);
}

TEST_CASE("bench-depth with a checkpoint emits exactly 3 method rows") {
    const auto csv = (work_dir() / "bench_full.csv").string();
    const RunResult r = run("bench-depth --checkpoint " + tiny_checkpoint() + " --out " + csv +
                            " --frames 1 --samples-per-ray 8");
    REQUIRE(r.exit_code == 0);
    std::istringstream lines(slurp(csv));
    std::string line;
    int rows = 0;
    std::getline(lines, line);
    CHECK(line == "method,depth_l2");
    while (std::getline(lines, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 3);
}

TEST_CASE("missing checkpoint exits 4 for bench/e2e/export") {
    CHECK(run("bench-depth --checkpoint /missing.ckpt --out /tmp/x.csv").exit_code == 4);
    CHECK(run("e2e --checkpoint /missing.ckpt").exit_code == 4);
    CHECK(run("export --checkpoint /missing.ckpt --scene-seed 1").exit_code == 4);
}

TEST_CASE("export writes a PLY that a standard reader parses") {
    const auto prefix = (work_dir() / "export_pc").string();
    const RunResult r = run("export --checkpoint " + tiny_checkpoint() +
                            " --scene-seed 4 --what pointcloud --out " + prefix +
                            " --budget 128");
    REQUIRE(r.exit_code == 0);
    const geff::PlyData ply = geff::read_ply(prefix + ".ply");
    CHECK(ply.vertex_count > 0);
    CHECK(ply.properties.front() == "x");
}

TEST_CASE("export grid writes occupancy and cost maps") {
    const auto prefix = (work_dir() / "export_grid").string();
    const RunResult r = run("export --checkpoint " + tiny_checkpoint() +
                            " --scene-seed 4 --what grid --out " + prefix + " --budget 128");
    REQUIRE(r.exit_code == 0);
    CHECK(fs::exists(prefix + "_occ.pgm"));
    CHECK(fs::exists(prefix + "_cost.pgm"));
}

TEST_CASE("stdout carries only the machine-readable JSON result") {
    const auto csv = (work_dir() / "bench_json.csv").string();
    const RunResult r = run("bench-depth --out " + csv + " --frames 1 --samples-per-ray 8");
    REQUIRE(r.exit_code == 0);
    // The whole stdout payload must parse as one JSON document.
    CHECK(r.stdout_text.rfind("{", 0) == 0);
}
