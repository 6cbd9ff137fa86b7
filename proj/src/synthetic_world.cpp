#include "geff/synthetic_world.hpp"

#include <algorithm>
#include <cmath>

#include "geff/threading.hpp"
#include "json.hpp"

namespace geff {

using nlohmann::json;

std::string shape_name(ShapeType s) {
    switch (s) {
        case ShapeType::Sphere: return "sphere";
        case ShapeType::Box: return "box";
        case ShapeType::Cylinder: return "cylinder";
        case ShapeType::Plane: return "plane";
    }
    return "sphere";
}

ShapeType shape_from_name(const std::string& name) {
    if (name == "sphere") return ShapeType::Sphere;
    if (name == "box") return ShapeType::Box;
    if (name == "cylinder") return ShapeType::Cylinder;
    if (name == "plane") return ShapeType::Plane;
    throw ParseError("unknown shape: " + name);
}

double Primitive::sdf(const Vec3& world_point) const {
    const Vec3 p = pose.apply_inverse(world_point);
    switch (shape) {
        case ShapeType::Sphere:
            return p.norm() - size.x();
        case ShapeType::Box: {
            const Vec3 q = p.cwiseAbs() - size;
            const Vec3 qpos = q.cwiseMax(0.0);
            const double outside = qpos.norm();
            const double inside = std::min(std::max(q.x(), std::max(q.y(), q.z())), 0.0);
            return outside + inside;
        }
        case ShapeType::Cylinder: {
            const double dr = std::hypot(p.x(), p.y()) - size.x();
            const double dz = std::abs(p.z()) - size.z();
            const double outside = std::hypot(std::max(dr, 0.0), std::max(dz, 0.0));
            const double inside = std::min(std::max(dr, dz), 0.0);
            return outside + inside;
        }
        case ShapeType::Plane:
            return p.z();
    }
    return 0.0;
}

double Primitive::bounding_radius() const {
    switch (shape) {
        case ShapeType::Sphere: return size.x();
        case ShapeType::Box: return size.norm();
        case ShapeType::Cylinder: return std::hypot(size.x(), size.z());
        case ShapeType::Plane: return 0.0;
    }
    return 0.0;
}

SdfResult scene_sdf(const AnalyticScene& scene, const Vec3& x) {
    SdfResult best;
    best.distance = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < scene.primitives.size(); ++i) {
        const double d = scene.primitives[i].sdf(x);
        if (d < best.distance) {
            best.distance = d;
            best.part_class_id = scene.primitives[i].part_class_id;
            best.object_id = scene.primitives[i].object_id;
            best.primitive_index = static_cast<int>(i);
        }
    }
    return best;
}

Vec3 scene_sdf_normal(const AnalyticScene& scene, const Vec3& x) {
    const double h = 1e-4;
    Vec3 n;
    for (int k = 0; k < 3; ++k) {
        Vec3 dx = Vec3::Zero();
        dx[k] = h;
        n[k] = (scene_sdf(scene, x + dx).distance - scene_sdf(scene, x - dx).distance) / (2 * h);
    }
    const double len = n.norm();
    return len > 1e-12 ? Vec3(n / len) : Vec3(0, 0, 1);
}

std::string AnalyticScene::to_json() const {
    json j;
    j["bounds_min"] = {bounds_min.x(), bounds_min.y(), bounds_min.z()};
    j["bounds_max"] = {bounds_max.x(), bounds_max.y(), bounds_max.z()};
    j["class_names"] = class_names;
    json prims = json::array();
    for (const auto& p : primitives) {
        json pj;
        pj["shape"] = shape_name(p.shape);
        std::vector<double> rot(9);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) rot[r * 3 + c] = p.pose.rotation(r, c);
        pj["rotation"] = rot;
        pj["translation"] = {p.pose.translation.x(), p.pose.translation.y(),
                             p.pose.translation.z()};
        pj["size"] = {p.size.x(), p.size.y(), p.size.z()};
        pj["part_class_id"] = p.part_class_id;
        pj["object_id"] = p.object_id;
        prims.push_back(pj);
    }
    j["primitives"] = prims;
    return j.dump(2);
}

AnalyticScene AnalyticScene::from_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ParseError("scene JSON is malformed");
    AnalyticScene scene;
    try {
        for (int k = 0; k < 3; ++k) {
            scene.bounds_min[k] = j.at("bounds_min").at(k).get<double>();
            scene.bounds_max[k] = j.at("bounds_max").at(k).get<double>();
        }
        scene.class_names = j.at("class_names").get<std::vector<std::string>>();
        for (const auto& pj : j.at("primitives")) {
            Primitive p;
            p.shape = shape_from_name(pj.at("shape").get<std::string>());
            const auto rot = pj.at("rotation").get<std::vector<double>>();
            if (rot.size() != 9) throw ParseError("rotation must have 9 entries");
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) p.pose.rotation(r, c) = rot[r * 3 + c];
            for (int k = 0; k < 3; ++k) {
                p.pose.translation[k] = pj.at("translation").at(k).get<double>();
                p.size[k] = pj.at("size").at(k).get<double>();
            }
            p.part_class_id = pj.at("part_class_id").get<int>();
            p.object_id = pj.at("object_id").get<int>();
            scene.primitives.push_back(p);
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("scene JSON: ") + e.what());
    }
    return scene;
}

namespace {

double primitive_volume(const Primitive& p) {
    switch (p.shape) {
        case ShapeType::Sphere: return 4.0 / 3.0 * M_PI * std::pow(p.size.x(), 3);
        case ShapeType::Box: return 8.0 * p.size.x() * p.size.y() * p.size.z();
        case ShapeType::Cylinder: return 2.0 * M_PI * p.size.x() * p.size.x() * p.size.z();
        case ShapeType::Plane: return 0.0;
    }
    return 0.0;
}

}  // namespace

Vec3 AnalyticScene::object_centroid(int object_id) const {
    Vec3 acc = Vec3::Zero();
    double total = 0;
    for (const auto& p : primitives) {
        if (p.object_id != object_id || p.shape == ShapeType::Plane) continue;
        const double vol = primitive_volume(p);
        acc += vol * p.pose.translation;
        total += vol;
    }
    if (total <= 0) throw Error(ErrorCode::InvalidArgument, "unknown object id");
    return acc / total;
}

Vec3 AnalyticScene::part_centroid(int part_class_id) const {
    for (const auto& p : primitives)
        if (p.part_class_id == part_class_id) return p.pose.translation;
    throw Error(ErrorCode::InvalidArgument, "no primitive with requested part class");
}

std::vector<int> AnalyticScene::object_ids() const {
    std::vector<int> ids;
    for (const auto& p : primitives)
        if (std::find(ids.begin(), ids.end(), p.object_id) == ids.end())
            ids.push_back(p.object_id);
    return ids;
}

int AnalyticScene::class_id(const std::string& name) const {
    for (std::size_t i = 0; i < class_names.size(); ++i)
        if (class_names[i] == name) return static_cast<int>(i);
    throw Error(ErrorCode::InvalidArgument, "unknown class name: " + name);
}

const std::vector<std::string> kGeneratorClassNames = {"floor", "ball", "box", "can",
                                                       "mug",   "mug handle"};
const char* kBackgroundQuery = "background";
const char* kWallQuery = "wall";

TeacherModel TeacherModel::create(const std::vector<std::string>& class_names, int dim,
                                  double noise_sigma, int coarseness, std::uint64_t seed) {
    TeacherModel t;
    t.embedding_dim = dim;
    t.noise_sigma = noise_sigma;
    t.coarseness = coarseness;
    t.seed = seed;
    t.class_names = class_names;
    t.class_names.push_back(kBackgroundQuery);
    t.class_names.push_back(kWallQuery);
    const int count = static_cast<int>(t.class_names.size());
    t.class_embeddings = Tensor(count, dim);
    Rng rng(seed);
    for (int i = 0; i < count; ++i) {
        // Random direction, Gram-Schmidt against earlier rows when possible.
        std::vector<double> v(dim);
        for (int k = 0; k < dim; ++k) v[k] = rng.normal();
        if (count <= dim) {
            for (int j = 0; j < i; ++j) {
                const double* e = t.class_embeddings.row_ptr(j);
                double dot = 0;
                for (int k = 0; k < dim; ++k) dot += v[k] * e[k];
                for (int k = 0; k < dim; ++k) v[k] -= dot * e[k];
            }
        }
        double norm = 0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        if (norm < 1e-9) {
            // Degenerate draw; fall back to a basis vector.
            std::fill(v.begin(), v.end(), 0.0);
            v[i % dim] = 1.0;
            norm = 1.0;
        }
        for (int k = 0; k < dim; ++k) t.class_embeddings.at(i, k) = v[k] / norm;
    }
    return t;
}

const double* TeacherModel::embedding(int class_id) const {
    if (class_id < 0 || class_id >= class_embeddings.rows)
        throw Error(ErrorCode::InvalidArgument, "class id out of range");
    return class_embeddings.row_ptr(class_id);
}

int TeacherModel::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < class_names.size(); ++i)
        if (class_names[i] == name) return static_cast<int>(i);
    return -1;
}

std::vector<double> TextTable::lookup(const std::string& query) const {
    auto it = entries.find(query);
    if (it == entries.end()) throw ParseError("query not in text table: " + query);
    return it->second;
}

TextTable make_text_table(const TeacherModel& teacher) {
    TextTable table;
    for (std::size_t i = 0; i < teacher.class_names.size(); ++i) {
        const double* e = teacher.embedding(static_cast<int>(i));
        table.entries[teacher.class_names[i]] =
            std::vector<double>(e, e + teacher.embedding_dim);
    }
    table.default_negatives = {kBackgroundQuery, "floor", kWallQuery};
    return table;
}

std::vector<float> teacher_features(const std::vector<int>& class_ids, int width, int height,
                                    const TeacherModel& teacher, std::uint64_t seed) {
    if (static_cast<int>(class_ids.size()) != width * height)
        throw ShapeError("teacher_features: class image size mismatch");
    const int dim = teacher.embedding_dim;
    const int background = teacher.index_of(kBackgroundQuery);
    std::vector<float> out(static_cast<std::size_t>(width) * height * dim);
    const int cf = std::max(1, teacher.coarseness);
    const int tiles_x = (width + cf - 1) / cf;
    const int tiles_y = (height + cf - 1) / cf;
    Rng base(seed);
    std::vector<double> feat(dim);
    for (int ty = 0; ty < tiles_y; ++ty) {
        for (int tx = 0; tx < tiles_x; ++tx) {
            const int cu = std::min(tx * cf + cf / 2, width - 1);
            const int cv = std::min(ty * cf + cf / 2, height - 1);
            int cls = class_ids[static_cast<std::size_t>(cv) * width + cu];
            if (cls < 0) cls = background;
            const double* e = teacher.embedding(cls);
            Rng rng = base.fork(static_cast<std::uint64_t>(ty) * tiles_x + tx);
            double norm = 0;
            for (int k = 0; k < dim; ++k) {
                feat[k] = e[k] + teacher.noise_sigma * rng.normal();
                norm += feat[k] * feat[k];
            }
            norm = std::sqrt(norm);
            if (norm < 1e-12) {
                std::copy(e, e + dim, feat.begin());
                norm = 1.0;
            }
            for (int v = ty * cf; v < std::min((ty + 1) * cf, height); ++v)
                for (int u = tx * cf; u < std::min((tx + 1) * cf, width); ++u) {
                    float* dst = &out[(static_cast<std::size_t>(v) * width + u) * dim];
                    for (int k = 0; k < dim; ++k)
                        dst[k] = static_cast<float>(feat[k] / norm);
                }
        }
    }
    return out;
}

namespace {

Vec3 class_albedo(int class_id) {
    static const Vec3 palette[] = {
        {0.45, 0.42, 0.40}, {0.85, 0.25, 0.20}, {0.20, 0.55, 0.85}, {0.30, 0.75, 0.35},
        {0.90, 0.70, 0.15}, {0.70, 0.30, 0.75}, {0.25, 0.75, 0.70}, {0.80, 0.50, 0.30},
        {0.55, 0.60, 0.85}, {0.75, 0.75, 0.30},
    };
    constexpr int n = static_cast<int>(sizeof(palette) / sizeof(palette[0]));
    return palette[((class_id % n) + n) % n];
}

struct TraceHit {
    bool hit = false;
    double t = 0;
    int class_id = -1;
};

TraceHit sphere_trace(const AnalyticScene& scene, const Ray& ray, const GtRenderOptions& opts) {
    double t = opts.t_near;
    for (int step = 0; step < opts.max_steps; ++step) {
        const Vec3 x = ray.origin + t * ray.direction;
        const SdfResult s = scene_sdf(scene, x);
        if (std::abs(s.distance) < opts.hit_epsilon) {
            return TraceHit{true, t, s.part_class_id};
        }
        t += s.distance;
        if (t > opts.t_far || t < 0) return {};
    }
    return {};
}

}  // namespace

std::vector<int> render_class_image(const AnalyticScene& scene, const Intrinsics& intr,
                                    const Pose& pose, const GtRenderOptions& opts) {
    std::vector<int> cls(static_cast<std::size_t>(intr.width) * intr.height, -1);
    parallel_for(intr.height, [&](std::size_t v0, std::size_t v1) {
        for (std::size_t v = v0; v < v1; ++v)
            for (int u = 0; u < intr.width; ++u) {
                const Ray ray = ray_through_pixel(intr, pose, static_cast<double>(u),
                                                  static_cast<double>(v));
                const TraceHit hit = sphere_trace(scene, ray, opts);
                if (hit.hit) cls[v * intr.width + u] = hit.class_id;
            }
    });
    return cls;
}

PosedFrame render_ground_truth_frame(const AnalyticScene& scene, const Intrinsics& intr,
                                     const Pose& pose, const TeacherModel& teacher,
                                     const GtRenderOptions& opts) {
    PosedFrame frame;
    frame.width = intr.width;
    frame.height = intr.height;
    frame.intrinsics = intr;
    frame.pose = pose;
    frame.color.assign(frame.pixel_count() * 3, 0.f);
    frame.depth.assign(frame.pixel_count(), 0.f);
    std::vector<int> cls(frame.pixel_count(), -1);

    const Vec3 light = Vec3(0.35, 0.25, 0.9).normalized();
    const Vec3 sky(0.70, 0.80, 0.90);

    parallel_for(intr.height, [&](std::size_t v0, std::size_t v1) {
        for (std::size_t v = v0; v < v1; ++v) {
            for (int u = 0; u < intr.width; ++u) {
                const std::size_t idx = v * intr.width + u;
                const Ray ray = ray_through_pixel(intr, pose, static_cast<double>(u),
                                                  static_cast<double>(v));
                const TraceHit hit = sphere_trace(scene, ray, opts);
                Vec3 color = sky;
                if (hit.hit) {
                    cls[idx] = hit.class_id;
                    // Camera-frame unit ray z component converts ray length
                    // to z-depth.
                    const double a = (u - intr.cx) / intr.fx;
                    const double b = (v - intr.cy) / intr.fy;
                    const double dz = 1.0 / std::sqrt(a * a + b * b + 1.0);
                    frame.depth[idx] = static_cast<float>(hit.t * dz);
                    const Vec3 x = ray.origin + hit.t * ray.direction;
                    const Vec3 n = scene_sdf_normal(scene, x);
                    const double lambert = 0.25 + 0.75 * std::max(0.0, n.dot(light));
                    color = class_albedo(hit.class_id) * lambert;
                }
                for (int k = 0; k < 3; ++k)
                    frame.color[idx * 3 + k] =
                        static_cast<float>(std::clamp(color[k], 0.0, 1.0));
            }
        }
    });

    if (opts.with_teacher_features) {
        frame.teacher_dim = teacher.embedding_dim;
        frame.teacher_features =
            teacher_features(cls, intr.width, intr.height, teacher, opts.feature_seed);
    }
    return frame;
}

AnalyticScene random_scene(std::uint64_t seed, const SceneSpec& spec) {
    if (spec.object_count < 1)
        throw Error(ErrorCode::InvalidArgument, "object_count must be >= 1");
    Rng rng(seed);
    AnalyticScene scene;
    scene.class_names = kGeneratorClassNames;

    Primitive ground;
    ground.shape = ShapeType::Plane;
    ground.part_class_id = scene.class_id("floor");
    ground.object_id = 0;
    scene.primitives.push_back(ground);

    struct Placed {
        Vec3 center;
        double radius;
    };
    std::vector<Placed> placed;

    const double margin = 1.2;
    for (int obj = 1; obj <= spec.object_count; ++obj) {
        enum Kind { Ball, BoxK, Can, Mug };
        Kind kind;
        if (spec.include_parts && obj == 1) {
            kind = Mug;
        } else {
            const int n = spec.include_parts ? 4 : 3;
            kind = static_cast<Kind>(rng.uniform_index(n));
        }

        std::vector<Primitive> prims;
        double radius = 0;
        switch (kind) {
            case Ball: {
                Primitive p;
                p.shape = ShapeType::Sphere;
                p.size = Vec3(rng.uniform(0.08, 0.16), 0, 0);
                p.part_class_id = scene.class_id("ball");
                radius = p.size.x();
                p.pose.translation = Vec3(0, 0, p.size.x());
                prims.push_back(p);
                break;
            }
            case BoxK: {
                Primitive p;
                p.shape = ShapeType::Box;
                p.size = Vec3(rng.uniform(0.06, 0.12), rng.uniform(0.06, 0.12),
                              rng.uniform(0.05, 0.15));
                p.part_class_id = scene.class_id("box");
                radius = p.size.norm();
                p.pose.translation = Vec3(0, 0, p.size.z());
                prims.push_back(p);
                break;
            }
            case Can: {
                Primitive p;
                p.shape = ShapeType::Cylinder;
                p.size = Vec3(rng.uniform(0.05, 0.09), 0, rng.uniform(0.08, 0.14));
                p.part_class_id = scene.class_id("can");
                radius = std::hypot(p.size.x(), p.size.z());
                p.pose.translation = Vec3(0, 0, p.size.z());
                prims.push_back(p);
                break;
            }
            case Mug: {
                Primitive body;
                body.shape = ShapeType::Cylinder;
                body.size = Vec3(rng.uniform(0.06, 0.10), 0, rng.uniform(0.07, 0.12));
                body.part_class_id = scene.class_id("mug");
                body.pose.translation = Vec3(0, 0, body.size.z());
                prims.push_back(body);

                const double phi = rng.uniform(0, 2 * M_PI);
                const Vec3 dir(std::cos(phi), std::sin(phi), 0);
                Primitive handle;
                handle.shape = ShapeType::Cylinder;
                handle.size = Vec3(0.012, 0, 0.03);  // radius, -, half length
                handle.part_class_id = scene.class_id("mug handle");
                Mat3 rot;
                rot.col(0) = Vec3(0, 0, 1);
                rot.col(1) = Vec3(dir.y(), -dir.x(), 0);
                rot.col(2) = dir;  // local z axis points radially outwards
                handle.pose.rotation = rot;
                handle.pose.translation =
                    Vec3(0, 0, body.size.z()) + dir * (body.size.x() + handle.size.z());
                prims.push_back(handle);

                radius = body.size.x() + 2 * handle.size.z() + handle.size.x();
                radius = std::max(radius, std::hypot(body.size.x(), body.size.z()));
                break;
            }
        }

        bool done = false;
        for (int attempt = 0; attempt < 1000 && !done; ++attempt) {
            const Vec3 offset(rng.uniform(-margin, margin), rng.uniform(-margin, margin), 0);
            bool clear = true;
            for (const auto& other : placed) {
                const double dist = (offset + prims[0].pose.translation - other.center)
                                        .head<2>()
                                        .norm();
                if (dist < radius + other.radius + 0.05) {
                    clear = false;
                    break;
                }
            }
            if (!clear) continue;
            for (auto p : prims) {
                p.pose.translation += offset;
                p.object_id = obj;
                scene.primitives.push_back(p);
            }
            placed.push_back({offset + prims[0].pose.translation, radius});
            done = true;
        }
        if (!done)
            throw PlacementFailedError("could not place object " + std::to_string(obj) +
                                       " after 1000 attempts");
    }
    return scene;
}

}  // namespace geff
