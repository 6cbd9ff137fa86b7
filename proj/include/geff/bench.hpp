#pragma once

#include <string>

#include "geff/model.hpp"
#include "geff/nav_plan.hpp"
#include "geff/renderer.hpp"
#include "geff/synthetic_world.hpp"
#include "geff/trainer.hpp"

namespace geff {

// Root mean squared depth error (meters) over pixels with valid GT depth.
double depth_rmse(const std::vector<float>& predicted_z, const PosedFrame& gt);

// Uniform-grid subsample of the depth map to at most `budget` pixels,
// upsampled back by nearest or bilinear interpolation.
std::vector<float> subsample_depth(const PosedFrame& frame, int budget, bool bilinear);

// Compression benchmark: 512 latent points against a 192x192 frame keeps the
// point budget well below the pixel count, as in the indoor-capture setting
// this mirrors; at very low resolutions the interpolation baselines become
// trivially strong.
struct DepthBenchOptions {
    std::uint64_t scene_seed = 9000;  // held-out scenes start here
    int frames = 10;
    int budget = 512;
    int image_size = 192;
    double focal = 192.0;
    int render_samples = 112;
    int scene_objects = 4;
    std::uint64_t teacher_seed = 1;
    double teacher_noise = 0.05;
};

struct DepthBenchRow {
    std::string method;
    double depth_l2 = 0;
};

struct DepthBenchResult {
    std::vector<DepthBenchRow> rows;  // geff (when model given), nearest, bilinear
    std::string to_csv() const;
};

// Encodes each held-out frame to at most `budget` latents and re-renders its
// depth from the same pose; projection baselines subsample + interpolate the
// raw depth map. model == nullptr runs baselines only.
DepthBenchResult bench_depth(GeffModel* model, const DepthBenchOptions& opts);

struct StageLatency {
    double encode_ms = 0, fuse_ms = 0, decode_ms = 0, score_ms = 0, plan_ms = 0;
    double total_ms() const { return encode_ms + fuse_ms + decode_ms + score_ms + plan_ms; }
};

// Scan/mapping protocol: higher-resolution frames and a larger per-frame
// anchor budget than the compression benchmark — mapping wants density on
// small objects (the clustering radius is 10 cm), not maximum compression.
struct E2eOptions {
    std::uint64_t seed = 2024;
    int trials = 20;
    int scene_objects = 4;
    bool part_trials = true;        // run the part-level branch on mug scenes
    bool scene_change = false;      // add an object after the scan, fuse one frame
    int scan_poses = 8;
    int image_size = 96;
    double focal = 96.0;
    int budget = 2560;
    std::uint64_t teacher_seed = 1;
    double teacher_noise = 0.05;    // part trials always run noiseless
    double nav_success_dist = 0.5;  // goal cell center to object centroid, meters
    double object_tolerance = 0.15;
    double part_tolerance = 0.02;
    double p_min = 0.5;
};

struct E2eTrial {
    std::uint64_t seed = 0;
    bool nav_success = false;
    bool object_success = false;
    bool part_attempted = false;
    bool part_success = false;
    double object_error = -1;
    double part_error = -1;
    StageLatency latency;
    std::string note;
};

struct E2eReport {
    double nav_success_rate = 0;
    double object_target_rate = 0;
    double part_target_rate = 0;  // over attempted part trials
    double mean_query_latency_ms = 0;
    StageLatency mean_stages;
    std::vector<E2eTrial> trials;
    E2eOptions options;
    std::string to_json() const;
};

// Simulated scan -> query -> navigate -> grasp-target evaluation on random
// scenes; every trial replays bit-identically from its logged seed.
E2eReport run_e2e(GeffModel& model, const E2eOptions& opts);

// Held-out evaluation used by training benchmarks: encode input ring views,
// render a novel view, report depth RMSE; probe mean ||grad sdf|| near
// surfaces.
struct HeldOutEval {
    double depth_l2 = 0;
    double mean_grad_norm = 0;
};
HeldOutEval eval_heldout(GeffModel& model, const AnalyticScene& scene,
                         const TeacherModel& teacher, std::uint64_t seed, int image_size = 64,
                         double focal = 64.0, int render_samples = 128, int grad_probes = 0);

}  // namespace geff
