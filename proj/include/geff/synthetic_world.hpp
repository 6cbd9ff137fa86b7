#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "geff/geometry.hpp"
#include "geff/tensor.hpp"

namespace geff {

enum class ShapeType { Sphere, Box, Cylinder, Plane };

std::string shape_name(ShapeType s);
ShapeType shape_from_name(const std::string& name);

// One analytic SDF primitive. `size` meaning by shape:
//   sphere:   x = radius
//   box:      half extents (x, y, z)
//   cylinder: x = radius, z = half height (axis = local z)
//   plane:    unused; surface is the local z = 0 plane, inside is z < 0
struct Primitive {
    ShapeType shape = ShapeType::Sphere;
    Pose pose;  // primitive-to-world
    Vec3 size = Vec3::Ones();
    int part_class_id = 0;
    int object_id = 0;

    double sdf(const Vec3& world_point) const;
    double bounding_radius() const;
};

struct SdfResult {
    double distance = 0;
    int part_class_id = -1;
    int object_id = -1;
    int primitive_index = -1;
};

// Ground-truth world: union (pointwise min) of exact primitive SDFs.
struct AnalyticScene {
    std::vector<Primitive> primitives;
    Vec3 bounds_min = Vec3(-3, -3, -0.2);
    Vec3 bounds_max = Vec3(3, 3, 2.5);
    std::vector<std::string> class_names;  // index = part_class_id

    std::string to_json() const;
    static AnalyticScene from_json(const std::string& text);

    // Volume-weighted mean of primitive centers belonging to object_id.
    Vec3 object_centroid(int object_id) const;
    // Center of the first primitive with the given part class.
    Vec3 part_centroid(int part_class_id) const;
    std::vector<int> object_ids() const;
    int class_id(const std::string& name) const;
};

// Exact signed distance plus the labels of the nearest primitive.
SdfResult scene_sdf(const AnalyticScene& scene, const Vec3& x);

// Central-difference normal of the scene SDF (h = 1e-4).
Vec3 scene_sdf_normal(const AnalyticScene& scene, const Vec3& x);

// Fixed class taxonomy used by the procedural generator.
extern const std::vector<std::string> kGeneratorClassNames;
extern const char* kBackgroundQuery;
extern const char* kWallQuery;

// Synthetic stand-in for a 2D vision-language feature model: one unit
// embedding per part class (orthogonalized when the count allows), Gaussian
// feature noise, and block-constant tiles emulating patch-level coarseness.
struct TeacherModel {
    int embedding_dim = 16;
    double noise_sigma = 0.05;
    int coarseness = 8;
    std::uint64_t seed = 0;
    Tensor class_embeddings;               // class_count x dim, unit rows
    std::vector<std::string> class_names;  // includes auxiliary entries

    static TeacherModel create(const std::vector<std::string>& class_names, int dim = 16,
                               double noise_sigma = 0.05, int coarseness = 8,
                               std::uint64_t seed = 1);

    int class_count() const { return class_embeddings.rows; }
    const double* embedding(int class_id) const;
    int index_of(const std::string& name) const;  // -1 when absent
};

// Query-string -> embedding lookup standing in for a text encoder.
struct TextTable {
    std::map<std::string, std::vector<double>> entries;
    std::vector<std::string> default_negatives;

    std::vector<double> lookup(const std::string& query) const;  // throws ParseError
    bool contains(const std::string& query) const { return entries.count(query) > 0; }
};

TextTable make_text_table(const TeacherModel& teacher);

// Per-pixel noisy class embeddings, renormalized, then made block-constant
// over coarseness x coarseness tiles (tile value = feature of the tile-center
// pixel). class_ids uses -1 for background pixels.
std::vector<float> teacher_features(const std::vector<int>& class_ids, int width, int height,
                                    const TeacherModel& teacher, std::uint64_t seed);

struct GtRenderOptions {
    double t_near = 0.05;
    double t_far = 8.0;  // sensor max range; deeper pixels read invalid
    int max_steps = 256;
    double hit_epsilon = 1e-4;
    std::uint64_t feature_seed = 0;
    bool with_teacher_features = true;
};

// Sphere-traced ground-truth render: z-depth (0 = miss), per-class Lambert
// albedo color, and teacher features.
PosedFrame render_ground_truth_frame(const AnalyticScene& scene, const Intrinsics& intrinsics,
                                     const Pose& pose, const TeacherModel& teacher,
                                     const GtRenderOptions& opts = {});

// Class id per pixel (-1 = miss), same tracing as the GT render.
std::vector<int> render_class_image(const AnalyticScene& scene, const Intrinsics& intrinsics,
                                    const Pose& pose, const GtRenderOptions& opts = {});

struct SceneSpec {
    int object_count = 3;
    bool include_parts = false;
};

// Deterministic procedural scene: ground plane plus `object_count`
// non-overlapping objects. With include_parts at least one mug (body +
// handle sharing an object id) is present. Throws PlacementFailedError after
// 1000 rejected placements.
AnalyticScene random_scene(std::uint64_t seed, const SceneSpec& spec);

}  // namespace geff
