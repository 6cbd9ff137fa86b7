#include "geff/bench.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace geff {

using nlohmann::json;

double depth_rmse(const std::vector<float>& predicted_z, const PosedFrame& gt) {
    if (predicted_z.size() != gt.pixel_count()) throw ShapeError("depth_rmse: size mismatch");
    double acc = 0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < predicted_z.size(); ++i) {
        if (gt.depth[i] <= 0) continue;
        const double d = static_cast<double>(predicted_z[i]) - gt.depth[i];
        acc += d * d;
        ++count;
    }
    return count ? std::sqrt(acc / count) : 0.0;
}

std::vector<float> subsample_depth(const PosedFrame& frame, int budget, bool bilinear) {
    // Largest square-ish grid with at most `budget` samples.
    const double aspect = static_cast<double>(frame.width) / frame.height;
    int gh = std::max(1, static_cast<int>(std::floor(std::sqrt(budget / aspect))));
    int gw = std::max(1, std::min(budget / gh, frame.width));
    gh = std::min(gh, frame.height);

    std::vector<float> grid(static_cast<std::size_t>(gw) * gh);
    for (int gy = 0; gy < gh; ++gy)
        for (int gx = 0; gx < gw; ++gx) {
            const int u = std::min(frame.width - 1,
                                   static_cast<int>((gx + 0.5) * frame.width / gw));
            const int v = std::min(frame.height - 1,
                                   static_cast<int>((gy + 0.5) * frame.height / gh));
            grid[static_cast<std::size_t>(gy) * gw + gx] = frame.depth_at(u, v);
        }

    std::vector<float> out(frame.pixel_count());
    for (int v = 0; v < frame.height; ++v)
        for (int u = 0; u < frame.width; ++u) {
            // Continuous coordinates in grid space.
            const double gx = (u + 0.5) * gw / frame.width - 0.5;
            const double gy = (v + 0.5) * gh / frame.height - 0.5;
            float value;
            if (!bilinear) {
                const int ix = std::clamp(static_cast<int>(std::lround(gx)), 0, gw - 1);
                const int iy = std::clamp(static_cast<int>(std::lround(gy)), 0, gh - 1);
                value = grid[static_cast<std::size_t>(iy) * gw + ix];
            } else {
                const int x0 = std::clamp(static_cast<int>(std::floor(gx)), 0, gw - 1);
                const int y0 = std::clamp(static_cast<int>(std::floor(gy)), 0, gh - 1);
                const int x1 = std::min(x0 + 1, gw - 1);
                const int y1 = std::min(y0 + 1, gh - 1);
                const double fx = std::clamp(gx - x0, 0.0, 1.0);
                const double fy = std::clamp(gy - y0, 0.0, 1.0);
                const double v00 = grid[static_cast<std::size_t>(y0) * gw + x0];
                const double v01 = grid[static_cast<std::size_t>(y0) * gw + x1];
                const double v10 = grid[static_cast<std::size_t>(y1) * gw + x0];
                const double v11 = grid[static_cast<std::size_t>(y1) * gw + x1];
                value = static_cast<float>((1 - fy) * ((1 - fx) * v00 + fx * v01) +
                                           fy * ((1 - fx) * v10 + fx * v11));
            }
            out[static_cast<std::size_t>(v) * frame.width + u] = value;
        }
    return out;
}

std::string DepthBenchResult::to_csv() const {
    std::ostringstream ss;
    ss << "method,depth_l2\n";
    for (const auto& row : rows) ss << row.method << "," << row.depth_l2 << "\n";
    return ss.str();
}

DepthBenchResult bench_depth(GeffModel* model, const DepthBenchOptions& opts) {
    const TeacherModel teacher = TeacherModel::create(
        kGeneratorClassNames, model ? model->encoder.teacher_dim : 16, opts.teacher_noise, 8,
        opts.teacher_seed);
    const Intrinsics intr = square_intrinsics(opts.image_size, opts.focal);

    double geff_acc = 0, nearest_acc = 0, bilinear_acc = 0;
    for (int i = 0; i < opts.frames; ++i) {
        const AnalyticScene scene =
            random_scene(opts.scene_seed + i, SceneSpec{opts.scene_objects, i % 2 == 1});
        Rng rng(opts.scene_seed + 31 * i);
        // Downward view: depth valid across the frame, as in indoor RGB-D
        // captures, so the interpolation baselines are not dominated by
        // invalid-pixel boundaries.
        const Pose pose = ring_pose(rng.uniform(1.5, 1.9), rng.uniform(1.3, 1.6),
                                    rng.uniform(0, 2 * M_PI), Vec3(0, 0, 0.1));
        GtRenderOptions gt_opts;
        gt_opts.feature_seed = opts.scene_seed + i;
        const PosedFrame gt = render_ground_truth_frame(scene, intr, pose, teacher, gt_opts);

        if (model) {
            const LatentPointCloud cloud = encode_frame(gt, model->encoder, opts.budget, 0);
            RenderConfig cfg;
            cfg.samples_per_ray = opts.render_samples;
            cfg.stratified = false;
            const RenderedImage img =
                render_image(intr, pose, cloud, model->decoders, cfg, opts.scene_seed + i);
            geff_acc += depth_rmse(img.depth_z, gt);
        }
        nearest_acc += depth_rmse(subsample_depth(gt, opts.budget, false), gt);
        bilinear_acc += depth_rmse(subsample_depth(gt, opts.budget, true), gt);
    }

    DepthBenchResult result;
    if (model) result.rows.push_back({"geff", geff_acc / opts.frames});
    result.rows.push_back({"nearest", nearest_acc / opts.frames});
    result.rows.push_back({"bilinear", bilinear_acc / opts.frames});
    return result;
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

GridCell snap_to_free(const OccupancyGrid& grid, GridCell cell) {
    cell.x = std::clamp(cell.x, 0, grid.width - 1);
    cell.y = std::clamp(cell.y, 0, grid.height - 1);
    if (!grid.occupied[grid.index(cell)]) return cell;
    for (int r = 1; r < std::max(grid.width, grid.height); ++r)
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx) {
                if (std::max(std::abs(dx), std::abs(dy)) != r) continue;
                const GridCell c{cell.x + dx, cell.y + dy};
                if (grid.in_bounds(c) && !grid.occupied[grid.index(c)]) return c;
            }
    throw NoReachableGoalError("no free cell in grid");
}

// Adds one extra object (a ball) at a clear spot; returns its object id.
int add_scene_object(AnalyticScene& scene, Rng& rng) {
    const int id = 1 + static_cast<int>(scene.object_ids().size());
    Primitive p;
    p.shape = ShapeType::Sphere;
    p.size = Vec3(0.12, 0, 0);
    p.part_class_id = scene.class_id("ball");
    p.object_id = id;
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const Vec3 pos(rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2), p.size.x());
        bool clear = true;
        for (const auto& other : scene.primitives) {
            if (other.shape == ShapeType::Plane) continue;
            if ((other.pose.translation - pos).head<2>().norm() <
                other.bounding_radius() + p.size.x() + 0.1) {
                clear = false;
                break;
            }
        }
        if (clear) {
            p.pose.translation = pos;
            scene.primitives.push_back(p);
            return id;
        }
    }
    throw PlacementFailedError("could not place scene-change object");
}

}  // namespace

std::string E2eReport::to_json() const {
    json j;
    j["nav_success_rate"] = nav_success_rate;
    j["object_target_rate"] = object_target_rate;
    j["part_target_rate"] = part_target_rate;
    j["mean_query_latency_ms"] = mean_query_latency_ms;
    j["mean_stage_ms"] = {{"encode", mean_stages.encode_ms}, {"fuse", mean_stages.fuse_ms},
                          {"decode", mean_stages.decode_ms}, {"score", mean_stages.score_ms},
                          {"plan", mean_stages.plan_ms}};
    j["thresholds"] = {{"nav_success_dist", options.nav_success_dist},
                       {"object_tolerance", options.object_tolerance},
                       {"part_tolerance", options.part_tolerance}};
    j["scene_change"] = options.scene_change;
    json trials_json = json::array();
    for (const auto& t : trials) {
        json tj;
        tj["seed"] = t.seed;
        tj["nav_success"] = t.nav_success;
        tj["object_success"] = t.object_success;
        tj["object_error"] = t.object_error;
        if (t.part_attempted) {
            tj["part_success"] = t.part_success;
            tj["part_error"] = t.part_error;
        }
        tj["latency_ms"] = t.latency.total_ms();
        if (!t.note.empty()) tj["note"] = t.note;
        trials_json.push_back(tj);
    }
    j["trials"] = trials_json;
    return j.dump(2);
}

E2eReport run_e2e(GeffModel& model, const E2eOptions& opts) {
    E2eReport report;
    report.options = opts;

    int nav_ok = 0, object_ok = 0, part_ok = 0, part_attempts = 0;
    double latency_acc = 0;

    for (int trial = 0; trial < opts.trials; ++trial) {
        E2eTrial t;
        t.seed = opts.seed + 1000 * trial;
        Rng rng(t.seed);

        const bool part_trial = opts.part_trials && trial % 2 == 0;
        const double noise = part_trial ? 0.0 : opts.teacher_noise;
        const TeacherModel teacher = TeacherModel::create(
            kGeneratorClassNames, model.encoder.teacher_dim, noise, 8, opts.teacher_seed);
        const TextTable table = make_text_table(teacher);

        AnalyticScene scene =
            random_scene(t.seed, SceneSpec{opts.scene_objects, part_trial});
        const Intrinsics intr = square_intrinsics(opts.image_size, opts.focal);

        try {
            // Scan trajectory: scan_poses on a 2 m circle facing the center.
            std::vector<PosedFrame> scan;
            for (int i = 0; i < opts.scan_poses; ++i) {
                GtRenderOptions gt_opts;
                gt_opts.feature_seed = t.seed + i;
                scan.push_back(render_ground_truth_frame(
                    scene, intr,
                    ring_pose(2.0, 1.0, 2 * M_PI * i / opts.scan_poses, Vec3(0, 0, 0.25)),
                    teacher, gt_opts));
            }

            LatentPointCloud cloud;
            for (std::size_t i = 0; i + 1 < scan.size(); ++i)
                cloud = fuse(cloud, encode_frame(scan[i], model.encoder, opts.budget,
                                                 static_cast<int>(i)));

            // Scene change: the target object appears after the initial scan
            // and is covered by a single extra frame.
            int target_object_id;
            std::string target_class;
            if (opts.scene_change) {
                Rng change_rng = rng.fork(7);
                target_object_id = add_scene_object(scene, change_rng);
                target_class = "ball";
            } else {
                // Prefer the mug on part trials, otherwise the first object.
                target_object_id = -1;
                for (const auto& p : scene.primitives) {
                    if (p.shape == ShapeType::Plane) continue;
                    if (part_trial &&
                        scene.class_names[p.part_class_id] != "mug")
                        continue;
                    target_object_id = p.object_id;
                    target_class = scene.class_names[p.part_class_id];
                    break;
                }
                if (target_object_id < 0) {
                    const auto& p = scene.primitives[1];
                    target_object_id = p.object_id;
                    target_class = scene.class_names[p.part_class_id];
                }
            }
            const Vec3 centroid = scene.object_centroid(target_object_id);

            // Last frame: either the final scan pose or, under scene change,
            // a fresh view of the modified scene. Query latency is measured
            // from the reception of this frame.
            GtRenderOptions last_opts;
            last_opts.feature_seed = t.seed + 100;
            const Pose last_pose =
                opts.scene_change
                    ? look_at(centroid + Vec3(1.2, 0.6, 0.8), centroid)
                    : ring_pose(2.0, 1.0, 2 * M_PI * (opts.scan_poses - 1) / opts.scan_poses,
                                Vec3(0, 0, 0.25));
            const PosedFrame last =
                render_ground_truth_frame(scene, intr, last_pose, teacher, last_opts);

            auto t0 = Clock::now();
            const LatentPointCloud last_cloud =
                encode_frame(last, model.encoder, opts.budget, opts.scan_poses - 1);
            t.latency.encode_ms = ms_since(t0);

            t0 = Clock::now();
            cloud = fuse(cloud, last_cloud);
            t.latency.fuse_ms = ms_since(t0);

            t0 = Clock::now();
            DecodedPointCloud dpc = decode_point_cloud(cloud, model.decoders);
            t.latency.decode_ms = ms_since(t0);

            QuerySpec query;
            query.positives = {table.lookup(target_class)};
            for (const auto& neg : table.default_negatives)
                if (neg != target_class) query.negatives.push_back(table.lookup(neg));

            t0 = Clock::now();
            OccupancyGrid grid = project_to_grid(dpc);
            const GridCell robot =
                snap_to_free(grid, grid.cell_of(2.2 * std::cos(0.3), 2.2 * std::sin(0.3)));
            const GoalSelection goal =
                select_goal(dpc, grid, query, robot, opts.p_min);
            t.latency.score_ms = ms_since(t0);

            t0 = Clock::now();
            const PlanResult plan = astar(grid, robot, goal.nav_goal);
            t.latency.plan_ms = ms_since(t0);
            (void)plan;

            const Vec3 goal_center = grid.cell_center(goal.nav_goal);
            t.nav_success =
                (goal_center.head<2>() - centroid.head<2>()).norm() <= opts.nav_success_dist;
            t.object_error = (goal.target.position - centroid).norm();
            t.object_success = t.object_error <= opts.object_tolerance;

            // Part-level branch: fuse close-range frames, then the two-pass
            // conditional query with the 1 cm clustering radius.
            if (part_trial && !opts.scene_change) {
                t.part_attempted = true;
                ++part_attempts;
                for (int i = 0; i < 3; ++i) {
                    const double az = 2 * M_PI * i / 3.0 + 0.4;
                    const Vec3 eye = centroid + Vec3(0.4 * std::cos(az), 0.4 * std::sin(az),
                                                     0.25);
                    GtRenderOptions close_opts;
                    close_opts.feature_seed = t.seed + 200 + i;
                    const PosedFrame close_frame = render_ground_truth_frame(
                        scene, intr, look_at(eye, centroid), teacher, close_opts);
                    cloud = fuse(cloud, encode_frame(close_frame, model.encoder, opts.budget,
                                                     opts.scan_poses + i));
                }
                dpc = decode_point_cloud(cloud, model.decoders);

                QuerySpec part_query;
                part_query.positives = {table.lookup("mug handle")};
                for (const auto& neg : table.default_negatives)
                    part_query.negatives.push_back(table.lookup(neg));
                part_query.negatives.push_back(table.lookup("mug"));

                const GraspTarget part = select_part_target(dpc, query, part_query);
                double best = std::numeric_limits<double>::infinity();
                const int handle_class = scene.class_id("mug handle");
                for (const auto& p : scene.primitives)
                    if (p.part_class_id == handle_class)
                        best = std::min(best, (part.position - p.pose.translation).norm());
                t.part_error = best;
                t.part_success = best <= opts.part_tolerance;
            }
        } catch (const Error& e) {
            t.note = e.what();
        }

        nav_ok += t.nav_success ? 1 : 0;
        object_ok += t.object_success ? 1 : 0;
        part_ok += t.part_success ? 1 : 0;
        latency_acc += t.latency.total_ms();
        report.mean_stages.encode_ms += t.latency.encode_ms;
        report.mean_stages.fuse_ms += t.latency.fuse_ms;
        report.mean_stages.decode_ms += t.latency.decode_ms;
        report.mean_stages.score_ms += t.latency.score_ms;
        report.mean_stages.plan_ms += t.latency.plan_ms;
        report.trials.push_back(std::move(t));
    }

    const double n = std::max(1, opts.trials);
    report.nav_success_rate = nav_ok / n;
    report.object_target_rate = object_ok / n;
    report.part_target_rate = part_attempts ? static_cast<double>(part_ok) / part_attempts : 0;
    report.mean_query_latency_ms = latency_acc / n;
    report.mean_stages.encode_ms /= n;
    report.mean_stages.fuse_ms /= n;
    report.mean_stages.decode_ms /= n;
    report.mean_stages.score_ms /= n;
    report.mean_stages.plan_ms /= n;
    return report;
}

HeldOutEval eval_heldout(GeffModel& model, const AnalyticScene& scene,
                         const TeacherModel& teacher, std::uint64_t seed, int image_size,
                         double focal, int render_samples, int grad_probes) {
    const Intrinsics intr = square_intrinsics(image_size, focal);
    Rng rng(seed);

    // Downward input views on the ring; novel view adjacent to one of them.
    std::vector<PosedFrame> inputs;
    for (int i = 0; i < 3; ++i) {
        GtRenderOptions gt_opts;
        gt_opts.feature_seed = seed + i;
        inputs.push_back(render_ground_truth_frame(
            scene, intr, ring_pose(1.7, 1.45, 2 * M_PI * i / 3.0, Vec3(0, 0, 0.1)), teacher,
            gt_opts));
    }
    const LatentPointCloud cloud = encode_frames(inputs, model.encoder, 512);

    const Pose novel = ring_pose(1.75, 1.5, 2 * M_PI / 3.0 + 0.12, Vec3(0, 0, 0.1));
    GtRenderOptions gt_opts;
    gt_opts.feature_seed = seed + 9;
    const PosedFrame gt = render_ground_truth_frame(scene, intr, novel, teacher, gt_opts);

    RenderConfig cfg;
    cfg.samples_per_ray = render_samples;
    cfg.stratified = false;
    const RenderedImage img = render_image(intr, novel, cloud, model.decoders, cfg, seed);

    HeldOutEval out;
    out.depth_l2 = depth_rmse(img.depth_z, gt);

    if (grad_probes > 0) {
        std::vector<std::pair<int, int>> valid;
        for (int v = 0; v < gt.height; ++v)
            for (int u = 0; u < gt.width; ++u)
                if (gt.depth_at(u, v) > 0) valid.emplace_back(u, v);
        const double h = 1e-3;
        std::vector<Vec3> queries;
        for (int i = 0; i < grad_probes && !valid.empty(); ++i) {
            const auto [u, v] = valid[rng.uniform_index(valid.size())];
            Vec3 p = backproject_pixel(gt.intrinsics, gt.pose, u, v, gt.depth_at(u, v));
            p += Vec3(rng.normal(0, 0.03), rng.normal(0, 0.03), rng.normal(0, 0.03));
            for (int k = 0; k < 3; ++k) {
                Vec3 d = Vec3::Zero();
                d[k] = h;
                queries.push_back(p + d);
                queries.push_back(p - d);
            }
        }
        const FieldSamples s = decode_fields(queries, cloud, model.decoders);
        double acc = 0;
        const int count = static_cast<int>(queries.size()) / 6;
        for (int i = 0; i < count; ++i) {
            Vec3 g;
            for (int k = 0; k < 3; ++k)
                g[k] = (s.sdf[6 * i + 2 * k] - s.sdf[6 * i + 2 * k + 1]) / (2 * h);
            acc += g.norm();
        }
        out.mean_grad_norm = count ? acc / count : 0;
    }
    return out;
}

}  // namespace geff
