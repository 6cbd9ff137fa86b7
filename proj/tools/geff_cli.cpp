// geff command-line tool. Talks to the library exclusively through the C API.
// Machine-readable results go to stdout; diagnostics to stderr.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "geff/geff.h"
#include "json.hpp"

using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNonFinite = 3;
constexpr int kExitCheckpoint = 4;

[[noreturn]] void die(int code, const std::string& message) {
    std::cerr << "geff: " << message << "\n";
    std::exit(code);
}

void check(int status, const std::string& context) {
    if (status == GEFF_OK) return;
    if (status == GEFF_ERR_NON_FINITE)
        die(kExitNonFinite, context + ": " + geff_last_error());
    die(1, context + ": " + geff_last_error());
}

std::string take_string(char* owned) {
    std::string out = owned ? owned : "";
    geff_string_free(owned);
    return out;
}

geff_model* load_checkpoint_or_die(const std::string& path) {
    geff_model* model = nullptr;
    if (geff_model_load(path.c_str(), &model) != GEFF_OK)
        die(kExitCheckpoint, "cannot load checkpoint '" + path + "': " + geff_last_error());
    return model;
}

// Camera-to-world matrix on a ring looking at the scene center.
std::vector<double> ring_pose(double radius, double height, double azimuth,
                              double target_z = 0.25) {
    const double ex = radius * std::cos(azimuth), ey = radius * std::sin(azimuth);
    // forward = normalize(target - eye), right/down per camera convention.
    double fx = -ex, fy = -ey, fz = target_z - height;
    const double fn = std::sqrt(fx * fx + fy * fy + fz * fz);
    fx /= fn; fy /= fn; fz /= fn;
    double rx = fy, ry = -fx, rz = 0;  // forward x up(0,0,1)
    const double rn = std::sqrt(rx * rx + ry * ry);
    rx /= rn; ry /= rn;
    const double dx = fy * rz - fz * ry, dy = fz * rx - fx * rz, dz = fx * ry - fy * rx;
    return {rx, dx, fx, ex, ry, dy, fy, ey, rz, dz, fz, height, 0, 0, 0, 1};
}

struct SceneFrames {
    geff_scene* scene = nullptr;
    geff_teacher* teacher = nullptr;
    std::vector<geff_frame*> frames;

    ~SceneFrames() {
        for (auto* f : frames) geff_frame_free(f);
        if (teacher) geff_teacher_free(teacher);
        if (scene) geff_scene_free(scene);
    }
};

// Renders a scan trajectory over a procedural scene.
void make_scan(SceneFrames& out, std::uint64_t seed, int objects, bool parts, int poses,
               int image_size, double noise) {
    check(geff_scene_random(seed, objects, parts ? 1 : 0, &out.scene), "scene_random");
    check(geff_teacher_create(16, noise, 8, 1, &out.teacher), "teacher_create");
    for (int i = 0; i < poses; ++i) {
        const auto pose = ring_pose(2.0, 1.0, 2 * M_PI * i / poses);
        geff_frame* frame = nullptr;
        check(geff_render_gt_frame(out.scene, out.teacher, image_size,
                                   static_cast<double>(image_size), pose.data(), seed + i,
                                   &frame),
              "render_gt_frame");
        out.frames.push_back(frame);
    }
}

// Encode + fuse a list of frames into one latent cloud.
geff_cloud* encode_all(geff_model* model, const std::vector<geff_frame*>& frames, int budget) {
    geff_cloud* fused = nullptr;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        geff_cloud* one = nullptr;
        check(geff_encode_frame(model, frames[i], budget, static_cast<int>(i), &one),
              "encode_frame");
        if (!fused) {
            fused = one;
        } else {
            check(geff_cloud_fuse(fused, one), "cloud_fuse");
            geff_cloud_free(one);
        }
    }
    return fused;
}

json query_json_from_text(const std::vector<std::string>& positives,
                          const std::vector<std::string>& negatives, double temperature) {
    json q;
    q["positives"] = positives;
    if (!negatives.empty()) q["negatives"] = negatives;
    q["temperature"] = temperature;
    return q;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"generalizable feature fields for RGB-D scenes"};
    app.require_subcommand(1);
    app.fallthrough(true);  // accept --config after the subcommand name
    app.set_config("--config")->description("TOML config (one table per subcommand)");
    app.allow_config_extras(false);

    // ---- synth ----------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "generate a synthetic scene dataset");
    std::string synth_out = "dataset";
    std::uint64_t synth_seed = 1;
    int synth_objects = 4, synth_frames = 8, synth_size = 64;
    bool synth_parts = false;
    double synth_noise = 0.05;
    synth->add_option("--out", synth_out, "output dataset directory");
    synth->add_option("--seed", synth_seed, "scene seed");
    synth->add_option("--objects", synth_objects, "object count");
    synth->add_flag("--parts", synth_parts, "include part-level objects");
    synth->add_option("--frames", synth_frames, "scan poses on the ring");
    synth->add_option("--image-size", synth_size, "frame resolution");
    synth->add_option("--teacher-noise", synth_noise, "teacher feature noise sigma");

    // ---- train ----------------------------------------------------------
    auto* train = app.add_subcommand("train", "train encoder and decoders");
    std::string train_ckpt = "geff.ckpt", train_csv;
    std::uint64_t train_seed = 7;
    int train_iters = 2000, train_rays = 48, train_samples = 24, train_sdf = 512,
        train_eik = 128, train_scenes = 5, train_objects = 4, train_size = 64;
    double train_lr = 1e-3, train_noise = 0.05;
    train->add_option("--checkpoint", train_ckpt, "checkpoint output path");
    train->add_option("--history", train_csv, "loss history CSV path");
    train->add_option("--iters", train_iters, "training steps");
    train->add_option("--seed", train_seed, "training seed");
    train->add_option("--rays-per-batch", train_rays);
    train->add_option("--samples-per-ray", train_samples);
    train->add_option("--sdf-samples", train_sdf);
    train->add_option("--eikonal-samples", train_eik);
    train->add_option("--scenes", train_scenes, "procedural training scenes");
    train->add_option("--objects", train_objects, "objects per scene");
    train->add_option("--image-size", train_size);
    train->add_option("--lr", train_lr);
    train->add_option("--teacher-noise", train_noise);

    // ---- bench-depth ------------------------------------------------------
    auto* bench = app.add_subcommand("bench-depth",
                                     "depth compression vs interpolation baselines");
    std::string bench_ckpt, bench_csv = "bench_depth.csv";
    std::uint64_t bench_seed = 9000;
    int bench_frames = 10, bench_budget = 512, bench_samples = 112;
    bench->add_option("--checkpoint", bench_ckpt, "trained checkpoint (omit for baselines)");
    bench->add_option("--out", bench_csv, "CSV output path");
    bench->add_option("--seed", bench_seed);
    bench->add_option("--frames", bench_frames);
    bench->add_option("--budget", bench_budget, "latent point budget");
    bench->add_option("--samples-per-ray", bench_samples);

    // ---- e2e --------------------------------------------------------------
    auto* e2e = app.add_subcommand("e2e", "simulated query/navigate/grasp-target evaluation");
    std::string e2e_ckpt, e2e_out;
    std::uint64_t e2e_seed = 2024;
    int e2e_trials = 20, e2e_objects = 4;
    bool e2e_change = false, e2e_no_parts = false;
    e2e->add_option("--checkpoint", e2e_ckpt, "trained checkpoint")->required();
    e2e->add_option("--out", e2e_out, "JSON report path");
    e2e->add_option("--trials", e2e_trials);
    e2e->add_option("--seed", e2e_seed);
    e2e->add_option("--objects", e2e_objects);
    e2e->add_flag("--scene-change", e2e_change, "add an object after the scan");
    e2e->add_flag("--no-part-trials", e2e_no_parts);

    // ---- export -----------------------------------------------------------
    auto* exp = app.add_subcommand("export", "decoded cloud / grid / renders to files");
    std::string exp_ckpt, exp_dataset, exp_what = "pointcloud", exp_out = "export";
    std::uint64_t exp_scene_seed = 0;
    bool exp_have_scene = false;
    int exp_budget = 512;
    exp->add_option("--checkpoint", exp_ckpt)->required();
    exp->add_option("--dataset", exp_dataset, "frame dataset directory");
    exp->add_option("--scene-seed", exp_scene_seed, "procedural scene instead of a dataset")
        ->each([&](const std::string&) { exp_have_scene = true; });
    exp->add_option("--what", exp_what)->check(CLI::IsMember({"pointcloud", "grid", "renders"}));
    exp->add_option("--out", exp_out, "output path prefix");
    exp->add_option("--budget", exp_budget);

    // ---- query ------------------------------------------------------------
    auto* query = app.add_subcommand("query", "open-vocabulary object / part query");
    std::string q_ckpt, q_dataset, q_part, q_score_ply;
    std::vector<std::string> q_pos, q_neg;
    std::uint64_t q_scene_seed = 0;
    bool q_have_scene = false;
    double q_temp = 0.1, q_pmin = 0.5;
    int q_budget = 512;
    query->add_option("--checkpoint", q_ckpt)->required();
    query->add_option("--dataset", q_dataset);
    query->add_option("--scene-seed", q_scene_seed)
        ->each([&](const std::string&) { q_have_scene = true; });
    query->add_option("--positive", q_pos, "positive query text")->required();
    query->add_option("--negative", q_neg, "negative query text (defaults when omitted)");
    query->add_option("--part", q_part, "part-level prompt (two-pass conditional query)");
    query->add_option("--temperature", q_temp);
    query->add_option("--p-min", q_pmin);
    query->add_option("--score-ply", q_score_ply, "write a per-point score PLY");
    query->add_option("--budget", q_budget);

    // ---- plan ---------------------------------------------------------------
    auto* plan = app.add_subcommand("plan", "occupancy grid + A* path");
    std::string p_ckpt, p_dataset, p_overlay;
    std::uint64_t p_scene_seed = 0;
    bool p_have_scene = false;
    std::vector<double> p_from{-1.5, -1.5}, p_to{1.5, 1.5};
    std::vector<std::string> p_avoid;  // "text:weight"
    int p_budget = 512;
    plan->add_option("--checkpoint", p_ckpt)->required();
    plan->add_option("--dataset", p_dataset);
    plan->add_option("--scene-seed", p_scene_seed)
        ->each([&](const std::string&) { p_have_scene = true; });
    plan->add_option("--from", p_from)->expected(2);
    plan->add_option("--to", p_to)->expected(2);
    plan->add_option("--avoid", p_avoid, "semantic affordance 'text:weight'");
    plan->add_option("--overlay", p_overlay, "path overlay PPM output");
    plan->add_option("--budget", p_budget);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "geff: " << e.what() << "\n";
        return kExitConfig;
    }

    // ---- synth ------------------------------------------------------------
    if (synth->parsed()) {
        SceneFrames sf;
        make_scan(sf, synth_seed, synth_objects, synth_parts, synth_frames, synth_size,
                  synth_noise);
        for (std::size_t i = 0; i < sf.frames.size(); ++i)
            check(geff_frame_save(sf.frames[i], synth_out.c_str(), static_cast<int>(i)),
                  "frame_save");
        const std::string scene_json =
            take_string([&] { char* s = nullptr; check(geff_scene_to_json(sf.scene, &s),
                                                       "scene_to_json"); return s; }());
        std::ofstream scene_file(synth_out + "/scene.json");
        scene_file << scene_json << "\n";
        json out;
        out["dir"] = synth_out;
        out["frames"] = sf.frames.size();
        out["scene_file"] = synth_out + "/scene.json";
        std::cout << out.dump(2) << "\n";
        return 0;
    }

    // ---- train --------------------------------------------------------------
    if (train->parsed()) {
        geff_model* model = nullptr;
        check(geff_model_create(train_seed, 64, 16, &model), "model_create");
        json opts;
        opts["iterations"] = train_iters;
        opts["rays_per_batch"] = train_rays;
        opts["samples_per_ray"] = train_samples;
        opts["sdf_samples_per_batch"] = train_sdf;
        opts["eikonal_samples_per_batch"] = train_eik;
        opts["seed"] = train_seed;
        opts["scene_count"] = train_scenes;
        opts["objects_per_scene"] = train_objects;
        opts["image_size"] = train_size;
        opts["focal"] = static_cast<double>(train_size);
        opts["lr"] = train_lr;
        opts["teacher_noise"] = train_noise;
        if (!train_csv.empty()) opts["history_csv"] = train_csv;

        char* summary = nullptr;
        const int status =
            geff_model_train(model, opts.dump().c_str(), nullptr, nullptr, &summary);
        if (status == GEFF_ERR_NON_FINITE) {
            // Keep the last-good parameters on disk for inspection.
            geff_model_save(model, train_ckpt.c_str());
            die(kExitNonFinite, std::string("training aborted: ") + geff_last_error());
        }
        check(status, "train");
        check(geff_model_save(model, train_ckpt.c_str()), "model_save");
        json out = json::parse(take_string(summary));
        out["checkpoint"] = train_ckpt;
        if (!train_csv.empty()) out["history_csv"] = train_csv;
        std::cout << out.dump(2) << "\n";
        geff_model_free(model);
        return 0;
    }

    // ---- bench-depth ---------------------------------------------------------
    if (bench->parsed()) {
        geff_model* model = nullptr;
        if (!bench_ckpt.empty()) model = load_checkpoint_or_die(bench_ckpt);
        json opts;
        opts["frames"] = bench_frames;
        opts["budget"] = bench_budget;
        opts["seed"] = bench_seed;
        opts["samples_per_ray"] = bench_samples;
        char* result = nullptr;
        check(geff_bench_depth(model, opts.dump().c_str(), &result), "bench_depth");
        json j = json::parse(take_string(result));
        std::ofstream csv(bench_csv);
        if (!csv) die(1, "cannot write " + bench_csv);
        csv << j.at("csv").get<std::string>();
        json out;
        out["rows"] = j.at("rows");
        out["csv"] = bench_csv;
        std::cout << out.dump(2) << "\n";
        if (model) geff_model_free(model);
        return 0;
    }

    // ---- e2e -------------------------------------------------------------------
    if (e2e->parsed()) {
        geff_model* model = load_checkpoint_or_die(e2e_ckpt);
        json opts;
        opts["trials"] = e2e_trials;
        opts["seed"] = e2e_seed;
        opts["objects_per_scene"] = e2e_objects;
        opts["scene_change"] = e2e_change;
        opts["part_trials"] = !e2e_no_parts;
        char* result = nullptr;
        check(geff_run_e2e(model, opts.dump().c_str(), &result), "run_e2e");
        const std::string report = take_string(result);
        if (!e2e_out.empty()) {
            std::ofstream f(e2e_out);
            if (!f) die(1, "cannot write " + e2e_out);
            f << report << "\n";
        }
        std::cout << report << "\n";
        geff_model_free(model);
        return 0;
    }

    // Shared by export/query/plan: latent cloud from a dataset or a scene.
    auto build_cloud = [&](geff_model* model, const std::string& dataset, bool have_scene,
                           std::uint64_t scene_seed, int budget,
                           SceneFrames& sf) -> geff_cloud* {
        if (!dataset.empty()) {
            std::vector<geff_frame*> frames;
            for (int i = 0;; ++i) {
                geff_frame* f = nullptr;
                if (geff_frame_load(dataset.c_str(), i, &f) != GEFF_OK) break;
                frames.push_back(f);
            }
            if (frames.empty()) die(kExitConfig, "no frames in dataset '" + dataset + "'");
            geff_cloud* cloud = encode_all(model, frames, budget);
            for (auto* f : frames) geff_frame_free(f);
            return cloud;
        }
        if (!have_scene) die(kExitConfig, "need --dataset or --scene-seed");
        make_scan(sf, scene_seed, 4, true, 8, 64, 0.05);
        return encode_all(model, sf.frames, budget);
    };

    // ---- export -----------------------------------------------------------------
    if (exp->parsed()) {
        geff_model* model = load_checkpoint_or_die(exp_ckpt);
        SceneFrames sf;
        geff_cloud* cloud =
            build_cloud(model, exp_dataset, exp_have_scene, exp_scene_seed, exp_budget, sf);
        json out;
        if (exp_what == "pointcloud") {
            geff_points* points = nullptr;
            check(geff_decode_points(model, cloud, &points), "decode_points");
            check(geff_points_save_ply(points, (exp_out + ".ply").c_str()), "save_ply");
            size_t n = 0;
            geff_points_size(points, &n);
            out["file"] = exp_out + ".ply";
            out["points"] = n;
            geff_points_free(points);
        } else if (exp_what == "grid") {
            geff_points* points = nullptr;
            check(geff_decode_points(model, cloud, &points), "decode_points");
            geff_grid* grid = nullptr;
            check(geff_grid_build(points, nullptr, &grid), "grid_build");
            check(geff_grid_save_occupancy_pgm(grid, (exp_out + "_occ.pgm").c_str()),
                  "save_occupancy");
            check(geff_grid_save_cost_pgm(grid, (exp_out + "_cost.pgm").c_str()), "save_cost");
            char* info = nullptr;
            check(geff_grid_info(grid, &info), "grid_info");
            out["grid"] = json::parse(take_string(info));
            out["files"] = {exp_out + "_occ.pgm", exp_out + "_cost.pgm"};
            geff_grid_free(grid);
            geff_points_free(points);
        } else {
            const auto pose = ring_pose(2.0, 1.0, 0.9);
            check(geff_render_image(model, cloud, 64, 64.0, pose.data(), 128,
                                    exp_out.c_str()),
                  "render_image");
            out["files"] = {exp_out + "_color.png", exp_out + "_depth.pgm",
                            exp_out + "_feature.png"};
        }
        std::cout << out.dump(2) << "\n";
        geff_cloud_free(cloud);
        geff_model_free(model);
        return 0;
    }

    // ---- query --------------------------------------------------------------------
    if (query->parsed()) {
        geff_model* model = load_checkpoint_or_die(q_ckpt);
        SceneFrames sf;
        geff_cloud* cloud =
            build_cloud(model, q_dataset, q_have_scene, q_scene_seed, q_budget, sf);
        geff_teacher* teacher = sf.teacher;
        if (!teacher) check(geff_teacher_create(16, 0.05, 8, 1, &teacher), "teacher_create");

        geff_points* points = nullptr;
        check(geff_decode_points(model, cloud, &points), "decode_points");

        const json object_q = query_json_from_text(q_pos, q_neg, q_temp);
        json out;
        char* result = nullptr;
        if (q_part.empty()) {
            check(geff_query_top_cluster(points, teacher, object_q.dump().c_str(), 0.10, 5,
                                         q_pmin, &result),
                  "query");
            out["object"] = json::parse(take_string(result));
        } else {
            std::vector<std::string> part_negatives = q_neg;
            part_negatives.insert(part_negatives.end(), q_pos.begin(), q_pos.end());
            const json part_q = query_json_from_text({q_part}, part_negatives, q_temp);
            check(geff_query_part(points, teacher, object_q.dump().c_str(),
                                  part_q.dump().c_str(), 0.10, 0.01, 5, q_pmin, &result),
                  "part query");
            out["part"] = json::parse(take_string(result));
        }
        if (!q_score_ply.empty()) {
            size_t n = 0;
            geff_points_size(points, &n);
            std::vector<double> scores(n);
            check(geff_query_scores(points, teacher, object_q.dump().c_str(), scores.data(),
                                    scores.size()),
                  "query_scores");
            // Score PLY comes from the library export path.
            out["score_ply"] = q_score_ply;
            geff_points_save_ply(points, q_score_ply.c_str());
        }
        std::cout << out.dump(2) << "\n";
        geff_points_free(points);
        if (teacher != sf.teacher) geff_teacher_free(teacher);
        geff_cloud_free(cloud);
        geff_model_free(model);
        return 0;
    }

    // ---- plan -----------------------------------------------------------------------
    if (plan->parsed()) {
        geff_model* model = load_checkpoint_or_die(p_ckpt);
        SceneFrames sf;
        geff_cloud* cloud =
            build_cloud(model, p_dataset, p_have_scene, p_scene_seed, p_budget, sf);
        geff_teacher* teacher = sf.teacher;
        if (!teacher) check(geff_teacher_create(16, 0.05, 8, 1, &teacher), "teacher_create");

        geff_points* points = nullptr;
        check(geff_decode_points(model, cloud, &points), "decode_points");
        geff_grid* grid = nullptr;
        check(geff_grid_build(points, nullptr, &grid), "grid_build");

        if (!p_avoid.empty()) {
            json avoid = json::array();
            for (const auto& spec : p_avoid) {
                const auto colon = spec.rfind(':');
                if (colon == std::string::npos)
                    die(kExitConfig, "--avoid expects 'text:weight', got '" + spec + "'");
                json entry;
                entry["query"] = query_json_from_text({spec.substr(0, colon)}, {}, 0.1);
                entry["weight"] = std::stod(spec.substr(colon + 1));
                avoid.push_back(entry);
            }
            check(geff_grid_apply_affordances(grid, teacher, avoid.dump().c_str()),
                  "affordances");
        }

        char* result = nullptr;
        check(geff_grid_plan(grid, p_from[0], p_from[1], p_to[0], p_to[1],
                             p_overlay.empty() ? nullptr : p_overlay.c_str(), &result),
              "plan");
        std::cout << take_string(result) << "\n";
        geff_grid_free(grid);
        geff_points_free(points);
        if (teacher != sf.teacher) geff_teacher_free(teacher);
        geff_cloud_free(cloud);
        geff_model_free(model);
        return 0;
    }

    return 0;
}
