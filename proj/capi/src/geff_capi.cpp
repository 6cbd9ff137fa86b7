#include "geff/geff.h"

#include <cstring>
#include <fstream>
#include <string>

#include "geff/bench.hpp"
#include "geff/dataset.hpp"
#include "geff/export.hpp"
#include "geff/model.hpp"
#include "geff/nav_plan.hpp"
#include "geff/renderer.hpp"
#include "geff/semantic_query.hpp"
#include "geff/synthetic_world.hpp"
#include "geff/trainer.hpp"
#include "json.hpp"

using nlohmann::json;

namespace {

thread_local std::string g_last_error = "ok";

int set_error(int code, const std::string& message) {
    g_last_error = message;
    return code;
}

template <typename Fn>
int wrap(Fn&& fn) {
    try {
        fn();
        return GEFF_OK;
    } catch (const geff::Error& e) {
        return set_error(static_cast<int>(e.code()), e.what());
    } catch (const std::exception& e) {
        return set_error(GEFF_ERR_UNKNOWN, e.what());
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

geff::Pose pose_from_matrix(const double m[16]) {
    geff::Pose pose;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) pose.rotation(r, c) = m[r * 4 + c];
        pose.translation[r] = m[r * 4 + 3];
    }
    if (pose.orthonormality_error() > 1e-6)
        throw geff::Error(geff::ErrorCode::InvalidArgument, "pose rotation not orthonormal");
    return pose;
}

void require(bool ok, const char* what) {
    if (!ok) throw geff::Error(geff::ErrorCode::InvalidArgument, what);
}

}  // namespace

struct geff_scene {
    geff::AnalyticScene scene;
};
struct geff_teacher {
    geff::TeacherModel teacher;
    geff::TextTable table;
};
struct geff_model {
    geff::GeffModel model;
};
struct geff_frame {
    geff::PosedFrame frame;
};
struct geff_cloud {
    geff::LatentPointCloud cloud;
};
struct geff_points {
    geff::DecodedPointCloud points;
};
struct geff_grid {
    geff::OccupancyGrid grid;
};

namespace {

// QuerySpec from JSON; string entries resolve through the teacher table.
geff::QuerySpec parse_query(const char* query_json, const geff_teacher* teacher) {
    require(query_json != nullptr, "query JSON is null");
    json j = json::parse(query_json, nullptr, false);
    if (j.is_discarded()) throw geff::ParseError("query JSON malformed");
    geff::QuerySpec spec;
    auto parse_group = [&](const char* key, std::vector<std::vector<double>>& out,
                           bool add_default_negatives) {
        if (!j.contains(key)) {
            if (add_default_negatives && teacher) {
                for (const auto& name : teacher->table.default_negatives)
                    out.push_back(teacher->table.lookup(name));
            }
            return;
        }
        for (const auto& entry : j.at(key)) {
            if (entry.is_string()) {
                require(teacher != nullptr, "text query requires a teacher handle");
                out.push_back(teacher->table.lookup(entry.get<std::string>()));
            } else {
                out.push_back(entry.get<std::vector<double>>());
            }
        }
    };
    parse_group("positives", spec.positives, false);
    parse_group("negatives", spec.negatives, true);
    if (j.contains("temperature")) spec.temperature = j.at("temperature").get<double>();
    return spec;
}

json cluster_to_json(const geff::ScoredCluster& c) {
    return json{{"centroid", {c.centroid.x(), c.centroid.y(), c.centroid.z()}},
                {"member_count", c.members.size()},
                {"mean_score", c.mean_score}};
}

}  // namespace

extern "C" {

const char* geff_version(void) { return "1.0.0"; }

const char* geff_last_error(void) { return g_last_error.c_str(); }

void geff_string_free(char* text) { std::free(text); }

/* ---- synthetic world -------------------------------------------------- */

int geff_scene_random(uint64_t seed, int object_count, int include_parts, geff_scene** out) {
    return wrap([&] {
        require(out, "out is null");
        auto scene = std::make_unique<geff_scene>();
        scene->scene = geff::random_scene(seed, {object_count, include_parts != 0});
        *out = scene.release();
    });
}

int geff_scene_from_json(const char* json_text, geff_scene** out) {
    return wrap([&] {
        require(json_text && out, "argument is null");
        auto scene = std::make_unique<geff_scene>();
        scene->scene = geff::AnalyticScene::from_json(json_text);
        *out = scene.release();
    });
}

int geff_scene_to_json(const geff_scene* scene, char** out_json) {
    return wrap([&] {
        require(scene && out_json, "argument is null");
        *out_json = dup_string(scene->scene.to_json());
    });
}

int geff_scene_sdf(const geff_scene* scene, const double xyz[3], double* out_distance,
                   int* out_class_id) {
    return wrap([&] {
        require(scene && xyz && out_distance, "argument is null");
        const geff::SdfResult r =
            geff::scene_sdf(scene->scene, geff::Vec3(xyz[0], xyz[1], xyz[2]));
        *out_distance = r.distance;
        if (out_class_id) *out_class_id = r.part_class_id;
    });
}

int geff_scene_report(const geff_scene* scene, char** out_json) {
    return wrap([&] {
        require(scene && out_json, "argument is null");
        json report;
        report["class_names"] = scene->scene.class_names;
        json objects = json::array();
        for (int id : scene->scene.object_ids()) {
            json obj;
            obj["object_id"] = id;
            std::vector<std::string> classes;
            for (const auto& p : scene->scene.primitives)
                if (p.object_id == id)
                    classes.push_back(scene->scene.class_names[p.part_class_id]);
            obj["classes"] = classes;
            if (id != 0) {
                const geff::Vec3 c = scene->scene.object_centroid(id);
                obj["centroid"] = {c.x(), c.y(), c.z()};
            }
            objects.push_back(obj);
        }
        report["objects"] = objects;
        *out_json = dup_string(report.dump(2));
    });
}

void geff_scene_free(geff_scene* scene) { delete scene; }

int geff_teacher_create(int embedding_dim, double noise_sigma, int coarseness, uint64_t seed,
                        geff_teacher** out) {
    return wrap([&] {
        require(out, "out is null");
        auto t = std::make_unique<geff_teacher>();
        t->teacher = geff::TeacherModel::create(geff::kGeneratorClassNames, embedding_dim,
                                                noise_sigma, coarseness, seed);
        t->table = geff::make_text_table(t->teacher);
        *out = t.release();
    });
}

int geff_teacher_embedding_dim(const geff_teacher* teacher, int* out_dim) {
    return wrap([&] {
        require(teacher && out_dim, "argument is null");
        *out_dim = teacher->teacher.embedding_dim;
    });
}

int geff_teacher_text_embedding(const geff_teacher* teacher, const char* query,
                                double* out_embedding, size_t embedding_capacity) {
    return wrap([&] {
        require(teacher && query && out_embedding, "argument is null");
        const auto e = teacher->table.lookup(query);
        require(embedding_capacity >= e.size(), "embedding buffer too small");
        std::copy(e.begin(), e.end(), out_embedding);
    });
}

int geff_teacher_default_negatives(const geff_teacher* teacher, char** out_json) {
    return wrap([&] {
        require(teacher && out_json, "argument is null");
        *out_json = dup_string(json(teacher->table.default_negatives).dump());
    });
}

void geff_teacher_free(geff_teacher* teacher) { delete teacher; }

int geff_render_gt_frame(const geff_scene* scene, const geff_teacher* teacher, int image_size,
                         double focal, const double pose4x4[16], uint64_t feature_seed,
                         geff_frame** out) {
    return wrap([&] {
        require(scene && teacher && pose4x4 && out, "argument is null");
        geff::GtRenderOptions opts;
        opts.feature_seed = feature_seed;
        auto frame = std::make_unique<geff_frame>();
        frame->frame = geff::render_ground_truth_frame(
            scene->scene, geff::square_intrinsics(image_size, focal),
            pose_from_matrix(pose4x4), teacher->teacher, opts);
        *out = frame.release();
    });
}

/* ---- frames ----------------------------------------------------------- */

int geff_frame_load(const char* dataset_dir, int index, geff_frame** out) {
    return wrap([&] {
        require(dataset_dir && out, "argument is null");
        auto frame = std::make_unique<geff_frame>();
        frame->frame = geff::load_frame(dataset_dir, index);
        *out = frame.release();
    });
}

int geff_frame_save(const geff_frame* frame, const char* dataset_dir, int index) {
    return wrap([&] {
        require(frame && dataset_dir, "argument is null");
        geff::save_frame(dataset_dir, index, frame->frame);
    });
}

int geff_frame_size(const geff_frame* frame, int* out_width, int* out_height) {
    return wrap([&] {
        require(frame && out_width && out_height, "argument is null");
        *out_width = frame->frame.width;
        *out_height = frame->frame.height;
    });
}

int geff_frame_depth(const geff_frame* frame, const float** out_depth) {
    return wrap([&] {
        require(frame && out_depth, "argument is null");
        *out_depth = frame->frame.depth.data();
    });
}

int geff_frame_color(const geff_frame* frame, const float** out_rgb) {
    return wrap([&] {
        require(frame && out_rgb, "argument is null");
        *out_rgb = frame->frame.color.data();
    });
}

void geff_frame_free(geff_frame* frame) { delete frame; }

/* ---- model ------------------------------------------------------------ */

int geff_model_create(uint64_t seed, int latent_dim, int teacher_dim, geff_model** out) {
    return wrap([&] {
        require(out, "out is null");
        auto model = std::make_unique<geff_model>();
        model->model = geff::GeffModel::create(seed, latent_dim, teacher_dim);
        *out = model.release();
    });
}

int geff_model_load(const char* checkpoint_path, geff_model** out) {
    return wrap([&] {
        require(checkpoint_path && out, "argument is null");
        auto model = std::make_unique<geff_model>();
        model->model = geff::GeffModel::load(checkpoint_path);
        *out = model.release();
    });
}

int geff_model_save(const geff_model* model, const char* checkpoint_path) {
    return wrap([&] {
        require(model && checkpoint_path, "argument is null");
        model->model.save(checkpoint_path);
    });
}

int geff_model_param_count(const geff_model* model, size_t* out_count) {
    return wrap([&] {
        require(model && out_count, "argument is null");
        *out_count = model->model.param_count();
    });
}

void geff_model_free(geff_model* model) { delete model; }

int geff_model_train(geff_model* model, const char* options_json, geff_train_callback callback,
                     void* user, char** out_summary_json) {
    return wrap([&] {
        require(model, "model is null");
        json opts = json::object();
        if (options_json) {
            opts = json::parse(options_json, nullptr, false);
            if (opts.is_discarded()) throw geff::ParseError("options JSON malformed");
        }
        geff::TrainConfig cfg;
        cfg.iterations = opts.value("iterations", 2000);
        cfg.rays_per_batch = opts.value("rays_per_batch", 48);
        cfg.sdf_samples_per_batch = opts.value("sdf_samples_per_batch", 512);
        cfg.eikonal_samples_per_batch = opts.value("eikonal_samples_per_batch", 128);
        cfg.render.samples_per_ray = opts.value("samples_per_ray", 24);
        cfg.seed = opts.value("seed", 7ull);
        cfg.lr = opts.value("lr", 1e-3);
        cfg.image_size = opts.value("image_size", 64);
        cfg.focal = opts.value("focal", 64.0);
        cfg.truncation = opts.value("truncation", 0.10);
        const int scene_count = opts.value("scene_count", 5);
        const std::uint64_t scene_seed = opts.value("scene_seed", 100ull);
        const int objects = opts.value("objects_per_scene", 4);
        const bool include_parts = opts.value("include_parts", true);
        const double teacher_noise = opts.value("teacher_noise", 0.05);
        cfg.scenes_per_epoch = scene_count;

        geff::LossWeights weights;
        if (opts.contains("loss_weights")) {
            const auto& w = opts.at("loss_weights");
            weights.color = w.value("color", 1.0);
            weights.depth = w.value("depth", 1.0);
            weights.sdf = w.value("sdf", 1.0);
            weights.eikonal = w.value("eikonal", 0.1);
            weights.feature = w.value("feature", 1.0);
        }

        std::vector<geff::AnalyticScene> scenes;
        for (int i = 0; i < scene_count; ++i)
            scenes.push_back(geff::random_scene(scene_seed + i, {objects, include_parts}));
        const geff::TeacherModel teacher = geff::TeacherModel::create(
            geff::kGeneratorClassNames, model->model.encoder.teacher_dim, teacher_noise, 8,
            opts.value("teacher_seed", 1ull));

        std::ofstream csv;
        if (opts.contains("history_csv")) {
            csv.open(opts.at("history_csv").get<std::string>());
            if (!csv) throw geff::IoError("cannot open history CSV for writing");
            csv << "step,color,depth,sdf,eikonal,feature,total\n";
        }

        const geff::TrainResult result = geff::train(
            scenes, teacher, model->model, cfg, weights,
            [&](int step, const geff::LossBreakdown& l) {
                if (csv.is_open())
                    csv << step << "," << l.color << "," << l.depth << "," << l.sdf << ","
                        << l.eikonal << "," << l.feature << "," << l.total << "\n";
                if (callback) {
                    const double terms[6] = {l.color, l.depth, l.sdf,
                                             l.eikonal, l.feature, l.total};
                    callback(user, step, terms, 6);
                }
            });

        if (out_summary_json) {
            json summary;
            summary["steps"] = result.steps_completed;
            summary["first_loss"] = result.history.front().total;
            summary["last_loss"] = result.history.back().total;
            *out_summary_json = dup_string(summary.dump(2));
        }
    });
}

/* ---- encoding / fusion ------------------------------------------------ */

int geff_encode_frame(const geff_model* model, const geff_frame* frame, int budget,
                      int frame_id, geff_cloud** out) {
    return wrap([&] {
        require(model && frame && out, "argument is null");
        auto cloud = std::make_unique<geff_cloud>();
        cloud->cloud = geff::encode_frame(frame->frame, model->model.encoder, budget, frame_id);
        *out = cloud.release();
    });
}

int geff_cloud_fuse(geff_cloud* dst, const geff_cloud* src) {
    return wrap([&] {
        require(dst && src, "argument is null");
        dst->cloud = geff::fuse(dst->cloud, src->cloud);
    });
}

int geff_cloud_size(const geff_cloud* cloud, size_t* out_count) {
    return wrap([&] {
        require(cloud && out_count, "argument is null");
        *out_count = cloud->cloud.size();
    });
}

int geff_cloud_save(const geff_cloud* cloud, const char* ply_path) {
    return wrap([&] {
        require(cloud && ply_path, "argument is null");
        geff::save_latent_cloud(cloud->cloud, ply_path);
    });
}

int geff_cloud_load(const char* ply_path, geff_cloud** out) {
    return wrap([&] {
        require(ply_path && out, "argument is null");
        auto cloud = std::make_unique<geff_cloud>();
        cloud->cloud = geff::load_latent_cloud(ply_path);
        *out = cloud.release();
    });
}

void geff_cloud_free(geff_cloud* cloud) { delete cloud; }

/* ---- decoding / query ------------------------------------------------- */

int geff_decode_points(const geff_model* model, const geff_cloud* cloud, geff_points** out) {
    return wrap([&] {
        require(model && cloud && out, "argument is null");
        auto points = std::make_unique<geff_points>();
        points->points = geff::decode_point_cloud(
            cloud->cloud, const_cast<geff_model*>(model)->model.decoders);
        *out = points.release();
    });
}

int geff_points_size(const geff_points* points, size_t* out_count) {
    return wrap([&] {
        require(points && out_count, "argument is null");
        *out_count = points->points.size();
    });
}

int geff_points_save_ply(const geff_points* points, const char* path) {
    return wrap([&] {
        require(points && path, "argument is null");
        geff::export_decoded_cloud_ply(path, points->points);
    });
}

void geff_points_free(geff_points* points) { delete points; }

int geff_decode_sdf(const geff_model* model, const geff_cloud* cloud, const double xyz[3],
                    double* out_sdf) {
    return wrap([&] {
        require(model && cloud && xyz && out_sdf, "argument is null");
        *out_sdf = geff::decode_sdf(geff::Vec3(xyz[0], xyz[1], xyz[2]), cloud->cloud,
                                    const_cast<geff_model*>(model)->model.decoders);
    });
}

int geff_decode_feature(const geff_model* model, const geff_cloud* cloud, const double xyz[3],
                        double* out_feature, size_t feature_capacity) {
    return wrap([&] {
        require(model && cloud && xyz && out_feature, "argument is null");
        const auto f =
            geff::decode_feature(geff::Vec3(xyz[0], xyz[1], xyz[2]), cloud->cloud,
                                 const_cast<geff_model*>(model)->model.decoders);
        require(feature_capacity >= f.size(), "feature buffer too small");
        std::copy(f.begin(), f.end(), out_feature);
    });
}

int geff_query_scores(const geff_points* points, const geff_teacher* teacher,
                      const char* query_json, double* out_scores, size_t score_capacity) {
    return wrap([&] {
        require(points && out_scores, "argument is null");
        require(score_capacity >= points->points.size(), "score buffer too small");
        const auto scores =
            geff::score_points(points->points, parse_query(query_json, teacher));
        std::copy(scores.begin(), scores.end(), out_scores);
    });
}

int geff_query_top_cluster(const geff_points* points, const geff_teacher* teacher,
                           const char* query_json, double eps, int min_pts, double p_min,
                           char** out_json) {
    return wrap([&] {
        require(points && out_json, "argument is null");
        const geff::ScoredCluster c = geff::top_cluster_query(
            points->points, parse_query(query_json, teacher), eps, min_pts, p_min);
        *out_json = dup_string(cluster_to_json(c).dump(2));
    });
}

int geff_query_part(const geff_points* points, const geff_teacher* teacher,
                    const char* object_query_json, const char* part_query_json,
                    double eps_object, double eps_part, int min_pts, double p_min,
                    char** out_json) {
    return wrap([&] {
        require(points && out_json, "argument is null");
        geff::PartQueryParams params;
        params.eps_object = eps_object;
        params.eps_part = eps_part;
        params.min_pts = min_pts;
        params.p_min = p_min;
        const geff::ScoredCluster c = geff::conditional_part_query(
            points->points, parse_query(object_query_json, teacher),
            parse_query(part_query_json, teacher), params);
        *out_json = dup_string(cluster_to_json(c).dump(2));
    });
}

/* ---- navigation ------------------------------------------------------- */

int geff_grid_build(const geff_points* points, const char* params_json, geff_grid** out) {
    return wrap([&] {
        require(points && out, "argument is null");
        geff::GridParams params;
        if (params_json) {
            json j = json::parse(params_json, nullptr, false);
            if (j.is_discarded()) throw geff::ParseError("grid params JSON malformed");
            params.cell_size = j.value("cell_size", params.cell_size);
            params.z_min = j.value("z_min", params.z_min);
            params.z_max = j.value("z_max", params.z_max);
            params.occupied_min_points =
                j.value("occupied_min_points", params.occupied_min_points);
            params.padding = j.value("padding", params.padding);
        }
        auto grid = std::make_unique<geff_grid>();
        grid->grid = geff::project_to_grid(points->points, params);
        *out = grid.release();
    });
}

int geff_grid_apply_affordances(geff_grid* grid, const geff_teacher* teacher,
                                const char* avoid_json) {
    return wrap([&] {
        require(grid && avoid_json, "argument is null");
        json j = json::parse(avoid_json, nullptr, false);
        if (j.is_discarded()) throw geff::ParseError("avoid JSON malformed");
        std::vector<std::pair<geff::QuerySpec, double>> avoid;
        for (const auto& entry : j)
            avoid.emplace_back(parse_query(entry.at("query").dump().c_str(), teacher),
                               entry.at("weight").get<double>());
        geff::apply_affordances(grid->grid, avoid);
    });
}

int geff_grid_info(const geff_grid* grid, char** out_json) {
    return wrap([&] {
        require(grid && out_json, "argument is null");
        int occupied = 0;
        for (auto o : grid->grid.occupied) occupied += o;
        json info;
        info["width"] = grid->grid.width;
        info["height"] = grid->grid.height;
        info["cell_size"] = grid->grid.cell_size;
        info["origin"] = {grid->grid.origin_x, grid->grid.origin_y};
        info["occupied_cells"] = occupied;
        *out_json = dup_string(info.dump(2));
    });
}

int geff_grid_save_occupancy_pgm(const geff_grid* grid, const char* path) {
    return wrap([&] {
        require(grid && path, "argument is null");
        geff::export_grid_pgm(path, grid->grid);
    });
}

int geff_grid_save_cost_pgm(const geff_grid* grid, const char* path) {
    return wrap([&] {
        require(grid && path, "argument is null");
        geff::export_cost_pgm(path, grid->grid);
    });
}

int geff_grid_plan(const geff_grid* grid, double start_x, double start_y, double goal_x,
                   double goal_y, const char* overlay_ppm_path, char** out_json) {
    return wrap([&] {
        require(grid && out_json, "argument is null");
        const geff::PlanResult plan =
            geff::astar(grid->grid, grid->grid.cell_of(start_x, start_y),
                        grid->grid.cell_of(goal_x, goal_y));
        if (overlay_ppm_path) geff::export_path_ppm(overlay_ppm_path, grid->grid, plan);
        json j;
        j["total_cost"] = plan.total_cost;
        json cells = json::array();
        json waypoints = json::array();
        for (std::size_t i = 0; i < plan.cells.size(); ++i) {
            cells.push_back({plan.cells[i].x, plan.cells[i].y});
            waypoints.push_back({plan.waypoints[i].x(), plan.waypoints[i].y()});
        }
        j["cells"] = cells;
        j["waypoints"] = waypoints;
        *out_json = dup_string(j.dump(2));
    });
}

int geff_grid_select_goal(const geff_grid* grid, const geff_points* points,
                          const geff_teacher* teacher, const char* query_json, double robot_x,
                          double robot_y, char** out_json) {
    return wrap([&] {
        require(grid && points && out_json, "argument is null");
        const geff::GoalSelection goal =
            geff::select_goal(points->points, grid->grid, parse_query(query_json, teacher),
                              grid->grid.cell_of(robot_x, robot_y));
        json j;
        j["target"] = {{"position",
                        {goal.target.position.x(), goal.target.position.y(),
                         goal.target.position.z()}},
                       {"cluster_size", goal.target.cluster_size},
                       {"mean_score", goal.target.mean_score}};
        j["nav_goal_cell"] = {goal.nav_goal.x, goal.nav_goal.y};
        const geff::Vec3 center = grid->grid.cell_center(goal.nav_goal);
        j["nav_goal_world"] = {center.x(), center.y()};
        *out_json = dup_string(j.dump(2));
    });
}

void geff_grid_free(geff_grid* grid) { delete grid; }

/* ---- rendering / export ----------------------------------------------- */

int geff_render_image(const geff_model* model, const geff_cloud* cloud, int image_size,
                      double focal, const double pose4x4[16], int samples_per_ray,
                      const char* out_prefix) {
    return wrap([&] {
        require(model && cloud && pose4x4 && out_prefix, "argument is null");
        geff::RenderConfig cfg;
        cfg.samples_per_ray = samples_per_ray > 0 ? samples_per_ray : 128;
        cfg.stratified = false;
        const geff::RenderedImage img = geff::render_image(
            geff::square_intrinsics(image_size, focal), pose_from_matrix(pose4x4),
            cloud->cloud, const_cast<geff_model*>(model)->model.decoders, cfg, 0);
        geff::export_render(out_prefix, img);
    });
}

/* ---- benchmarks ------------------------------------------------------- */

int geff_bench_depth(const geff_model* model, const char* options_json, char** out_json) {
    return wrap([&] {
        require(out_json, "out is null");
        geff::DepthBenchOptions opts;
        if (options_json) {
            json j = json::parse(options_json, nullptr, false);
            if (j.is_discarded()) throw geff::ParseError("options JSON malformed");
            opts.frames = j.value("frames", opts.frames);
            opts.budget = j.value("budget", opts.budget);
            opts.scene_seed = j.value("seed", opts.scene_seed);
            opts.image_size = j.value("image_size", opts.image_size);
            opts.focal = j.value("focal", static_cast<double>(opts.image_size));
            opts.render_samples = j.value("samples_per_ray", opts.render_samples);
            opts.teacher_noise = j.value("teacher_noise", opts.teacher_noise);
        }
        const geff::DepthBenchResult result = geff::bench_depth(
            model ? &const_cast<geff_model*>(model)->model : nullptr, opts);
        json j;
        json rows = json::array();
        for (const auto& row : result.rows)
            rows.push_back({{"method", row.method}, {"depth_l2", row.depth_l2}});
        j["rows"] = rows;
        j["csv"] = result.to_csv();
        *out_json = dup_string(j.dump(2));
    });
}

int geff_run_e2e(const geff_model* model, const char* options_json, char** out_json) {
    return wrap([&] {
        require(model && out_json, "argument is null");
        geff::E2eOptions opts;
        if (options_json) {
            json j = json::parse(options_json, nullptr, false);
            if (j.is_discarded()) throw geff::ParseError("options JSON malformed");
            opts.trials = j.value("trials", opts.trials);
            opts.seed = j.value("seed", opts.seed);
            opts.scene_objects = j.value("objects_per_scene", opts.scene_objects);
            opts.part_trials = j.value("part_trials", opts.part_trials);
            opts.scene_change = j.value("scene_change", opts.scene_change);
            opts.scan_poses = j.value("scan_poses", opts.scan_poses);
            opts.image_size = j.value("image_size", opts.image_size);
            opts.focal = j.value("focal", static_cast<double>(opts.image_size));
            opts.budget = j.value("budget", opts.budget);
            opts.teacher_noise = j.value("teacher_noise", opts.teacher_noise);
        }
        const geff::E2eReport report =
            geff::run_e2e(const_cast<geff_model*>(model)->model, opts);
        *out_json = dup_string(report.to_json());
    });
}

}  // extern "C"
