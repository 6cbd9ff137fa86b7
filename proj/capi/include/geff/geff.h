/* geff — generalizable feature fields for RGB-D scenes.
 *
 * C API over the core library: opaque handles, integer status codes, and
 * JSON strings for structured data. Every function returns GEFF_OK (0) on
 * success; on failure geff_last_error() describes the problem for the
 * calling thread. Strings returned through char** outputs are owned by the
 * caller and released with geff_string_free().
 */
#ifndef GEFF_H
#define GEFF_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define GEFF_API_VERSION_MAJOR 1
#define GEFF_API_VERSION_MINOR 0

/* Status codes (mirror the core error taxonomy). */
enum {
    GEFF_OK = 0,
    GEFF_ERR_INVALID_ARGUMENT = 1,
    GEFF_ERR_SHAPE = 2,
    GEFF_ERR_NOT_SCALAR = 3,
    GEFF_ERR_NON_FINITE = 4,
    GEFF_ERR_EMPTY_CLOUD = 5,
    GEFF_ERR_EMPTY_BATCH = 6,
    GEFF_ERR_QUERY_NO_MATCH = 7,
    GEFF_ERR_NO_PATH = 8,
    GEFF_ERR_INVALID_ENDPOINT = 9,
    GEFF_ERR_NO_REACHABLE_GOAL = 10,
    GEFF_ERR_PLACEMENT_FAILED = 11,
    GEFF_ERR_INVALID_PIXEL = 12,
    GEFF_ERR_IO = 13,
    GEFF_ERR_PARSE = 14,
    GEFF_ERR_UNKNOWN = 99
};

typedef struct geff_scene geff_scene;     /* analytic ground-truth world  */
typedef struct geff_teacher geff_teacher; /* synthetic 2D feature model   */
typedef struct geff_model geff_model;     /* encoder + field decoders     */
typedef struct geff_frame geff_frame;     /* one posed RGB-D observation  */
typedef struct geff_cloud geff_cloud;     /* sparse latent point cloud    */
typedef struct geff_points geff_points;   /* decoded point cloud          */
typedef struct geff_grid geff_grid;       /* 2D occupancy / cost grid     */

const char* geff_version(void);
/* Thread-local message for the most recent failure. Never NULL. */
const char* geff_last_error(void);
void geff_string_free(char* text);

/* ---- synthetic world -------------------------------------------------- */

/* Deterministic procedural scene (ground plane + objects). */
int geff_scene_random(uint64_t seed, int object_count, int include_parts, geff_scene** out);
int geff_scene_from_json(const char* json_text, geff_scene** out);
int geff_scene_to_json(const geff_scene* scene, char** out_json);
/* Exact signed distance and the part class at a point. */
int geff_scene_sdf(const geff_scene* scene, const double xyz[3], double* out_distance,
                   int* out_class_id);
/* JSON report: object ids, classes, analytic centroids. */
int geff_scene_report(const geff_scene* scene, char** out_json);
void geff_scene_free(geff_scene* scene);

int geff_teacher_create(int embedding_dim, double noise_sigma, int coarseness, uint64_t seed,
                        geff_teacher** out);
int geff_teacher_embedding_dim(const geff_teacher* teacher, int* out_dim);
/* Query-text -> embedding lookup (the text-encoder stand-in). */
int geff_teacher_text_embedding(const geff_teacher* teacher, const char* query,
                                double* out_embedding, size_t embedding_capacity);
int geff_teacher_default_negatives(const geff_teacher* teacher, char** out_json);
void geff_teacher_free(geff_teacher* teacher);

/* Sphere-traced ground-truth render with teacher features. Pose is a
 * row-major 4x4 camera-to-world matrix. */
int geff_render_gt_frame(const geff_scene* scene, const geff_teacher* teacher, int image_size,
                         double focal, const double pose4x4[16], uint64_t feature_seed,
                         geff_frame** out);

/* ---- frames ----------------------------------------------------------- */

int geff_frame_load(const char* dataset_dir, int index, geff_frame** out);
int geff_frame_save(const geff_frame* frame, const char* dataset_dir, int index);
int geff_frame_size(const geff_frame* frame, int* out_width, int* out_height);
/* Borrowed pointers, valid while the frame lives. Depth is z-depth meters. */
int geff_frame_depth(const geff_frame* frame, const float** out_depth);
int geff_frame_color(const geff_frame* frame, const float** out_rgb);
void geff_frame_free(geff_frame* frame);

/* ---- model ------------------------------------------------------------ */

int geff_model_create(uint64_t seed, int latent_dim, int teacher_dim, geff_model** out);
int geff_model_load(const char* checkpoint_path, geff_model** out);
int geff_model_save(const geff_model* model, const char* checkpoint_path);
int geff_model_param_count(const geff_model* model, size_t* out_count);
void geff_model_free(geff_model* model);

/* Training over procedural scenes. options_json keys (all optional):
 *   iterations, rays_per_batch, sdf_samples_per_batch,
 *   eikonal_samples_per_batch, samples_per_ray, seed, scene_count,
 *   scene_seed, objects_per_scene, include_parts, lr, image_size, focal,
 *   teacher_noise, loss_weights {color,depth,sdf,eikonal,feature},
 *   history_csv (path; written when present)
 * Returns a JSON summary (first/last loss, steps). */
typedef void (*geff_train_callback)(void* user, int step, const double* loss_terms,
                                    int term_count);
int geff_model_train(geff_model* model, const char* options_json, geff_train_callback callback,
                     void* user, char** out_summary_json);

/* ---- encoding / fusion ------------------------------------------------ */

int geff_encode_frame(const geff_model* model, const geff_frame* frame, int budget,
                      int frame_id, geff_cloud** out);
/* Order-preserving concatenation: dst = dst then src. */
int geff_cloud_fuse(geff_cloud* dst, const geff_cloud* src);
int geff_cloud_size(const geff_cloud* cloud, size_t* out_count);
int geff_cloud_save(const geff_cloud* cloud, const char* ply_path);
int geff_cloud_load(const char* ply_path, geff_cloud** out);
void geff_cloud_free(geff_cloud* cloud);

/* ---- decoding / query ------------------------------------------------- */

/* Latent anchors projected onto the decoded surface. */
int geff_decode_points(const geff_model* model, const geff_cloud* cloud, geff_points** out);
int geff_points_size(const geff_points* points, size_t* out_count);
int geff_points_save_ply(const geff_points* points, const char* path);
void geff_points_free(geff_points* points);

/* Field probes at a single position. */
int geff_decode_sdf(const geff_model* model, const geff_cloud* cloud, const double xyz[3],
                    double* out_sdf);
int geff_decode_feature(const geff_model* model, const geff_cloud* cloud, const double xyz[3],
                        double* out_feature, size_t feature_capacity);

/* query_json: {"positives": [[...]|"text", ...], "negatives": [...],
 *              "temperature": 0.1}. Text entries require `teacher`.
 * Returns per-point scores (length = point count). */
int geff_query_scores(const geff_points* points, const geff_teacher* teacher,
                      const char* query_json, double* out_scores, size_t score_capacity);
/* Best cluster of high-response points; result JSON has centroid, size,
 * mean_score, member_count. */
int geff_query_top_cluster(const geff_points* points, const geff_teacher* teacher,
                           const char* query_json, double eps, int min_pts, double p_min,
                           char** out_json);
/* Two-pass conditional part query (object pass then part pass at eps_part). */
int geff_query_part(const geff_points* points, const geff_teacher* teacher,
                    const char* object_query_json, const char* part_query_json,
                    double eps_object, double eps_part, int min_pts, double p_min,
                    char** out_json);

/* ---- navigation ------------------------------------------------------- */

/* params_json (optional keys): cell_size, z_min, z_max, occupied_min_points,
 * padding. */
int geff_grid_build(const geff_points* points, const char* params_json, geff_grid** out);
/* avoid_json: [{"query": {...}, "weight": w}, ...] */
int geff_grid_apply_affordances(geff_grid* grid, const geff_teacher* teacher,
                                const char* avoid_json);
int geff_grid_info(const geff_grid* grid, char** out_json);
int geff_grid_save_occupancy_pgm(const geff_grid* grid, const char* path);
int geff_grid_save_cost_pgm(const geff_grid* grid, const char* path);
/* World coordinates in, plan JSON out (cells, waypoints, total cost);
 * optionally writes a PPM overlay. */
int geff_grid_plan(const geff_grid* grid, double start_x, double start_y, double goal_x,
                   double goal_y, const char* overlay_ppm_path, char** out_json);
/* Query -> grasp target + reachable nav goal (JSON). */
int geff_grid_select_goal(const geff_grid* grid, const geff_points* points,
                          const geff_teacher* teacher, const char* query_json, double robot_x,
                          double robot_y, char** out_json);
void geff_grid_free(geff_grid* grid);

/* ---- rendering / export ----------------------------------------------- */

/* Renders color/feature/depth from the latents; writes prefix_color.png,
 * prefix_depth.pgm (millimeters), prefix_feature.png (PCA colors). */
int geff_render_image(const geff_model* model, const geff_cloud* cloud, int image_size,
                      double focal, const double pose4x4[16], int samples_per_ray,
                      const char* out_prefix);

/* ---- benchmarks ------------------------------------------------------- */

/* Depth-compression benchmark. options_json keys: frames, budget, seed,
 * image_size, samples_per_ray. model may be NULL (baselines only).
 * Returns {"rows": [{"method": ..., "depth_l2": ...}], "csv": "..."}. */
int geff_bench_depth(const geff_model* model, const char* options_json, char** out_json);

/* End-to-end scan -> query -> navigate -> grasp-target evaluation.
 * options_json keys: trials, seed, objects_per_scene, part_trials,
 * scene_change, scan_poses, image_size, budget, teacher_noise. */
int geff_run_e2e(const geff_model* model, const char* options_json, char** out_json);

#ifdef __cplusplus
}
#endif

#endif /* GEFF_H */
