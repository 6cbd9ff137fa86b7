#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "geff/synthetic_world.hpp"
#include "geff/trainer.hpp"

using namespace geff;

namespace {

AnalyticScene single_sphere(double radius = 0.5, const Vec3& center = Vec3::Zero()) {
    AnalyticScene scene;
    scene.class_names = {"floor", "ball"};
    Primitive p;
    p.shape = ShapeType::Sphere;
    p.size = Vec3(radius, 0, 0);
    p.pose.translation = center;
    p.part_class_id = 1;
    p.object_id = 1;
    scene.primitives.push_back(p);
    return scene;
}

// Brute-force ray march oracle for the sphere-traced depth.
double ray_march_depth(const AnalyticScene& scene, const Ray& ray, double t_far = 12.0,
                       int steps = 10000) {
    const double dt = t_far / steps;
    double prev_sdf = scene_sdf(scene, ray.origin).distance;
    for (int i = 1; i <= steps; ++i) {
        const double t = i * dt;
        const double sdf = scene_sdf(scene, ray.origin + t * ray.direction).distance;
        if (prev_sdf > 0 && sdf <= 0) {
            // Linear interpolation of the crossing inside the step.
            const double frac = prev_sdf / (prev_sdf - sdf);
            return (i - 1 + frac) * dt;
        }
        prev_sdf = sdf;
    }
    return 0.0;
}

}  // namespace

TEST_CASE("sphere SDF: outside, inside, surface") {
    const AnalyticScene scene = single_sphere();
    CHECK(scene_sdf(scene, Vec3(1, 0, 0)).distance == doctest::Approx(0.5));
    CHECK(scene_sdf(scene, Vec3(0, 0, 0)).distance == doctest::Approx(-0.5));
    CHECK(scene_sdf(scene, Vec3(0.5, 0, 0)).distance == doctest::Approx(0.0));
}

TEST_CASE("union of two spheres is the pointwise min of their SDFs") {
    AnalyticScene scene = single_sphere(0.5, Vec3(0, 0, 0));
    Primitive second;
    second.shape = ShapeType::Sphere;
    second.size = Vec3(0.3, 0, 0);
    second.pose.translation = Vec3(2, 0, 0);
    second.part_class_id = 1;
    second.object_id = 2;
    scene.primitives.push_back(second);

    Rng rng(4);
    for (int i = 0; i < 200; ++i) {
        const Vec3 x(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
        const double d1 = (x - Vec3(0, 0, 0)).norm() - 0.5;
        const double d2 = (x - Vec3(2, 0, 0)).norm() - 0.3;
        CHECK(scene_sdf(scene, x).distance == doctest::Approx(std::min(d1, d2)));
    }
}

TEST_CASE("box and cylinder SDFs are exact at axis-aligned probes") {
    AnalyticScene scene;
    scene.class_names = {"box"};
    Primitive box;
    box.shape = ShapeType::Box;
    box.size = Vec3(0.1, 0.2, 0.3);
    box.part_class_id = 0;
    scene.primitives.push_back(box);
    CHECK(scene_sdf(scene, Vec3(0.5, 0, 0)).distance == doctest::Approx(0.4));
    CHECK(scene_sdf(scene, Vec3(0, 0, 0)).distance == doctest::Approx(-0.1));

    Primitive cyl;
    cyl.shape = ShapeType::Cylinder;
    cyl.size = Vec3(0.2, 0, 0.4);
    cyl.part_class_id = 0;
    scene.primitives[0] = cyl;
    CHECK(scene_sdf(scene, Vec3(0.7, 0, 0)).distance == doctest::Approx(0.5));
    CHECK(scene_sdf(scene, Vec3(0, 0, 1.0)).distance == doctest::Approx(0.6));
    CHECK(scene_sdf(scene, Vec3(0, 0, 0)).distance == doctest::Approx(-0.2));
}

TEST_CASE("scene SDF is 1-Lipschitz on random point pairs") {
    const AnalyticScene scene = random_scene(3, {4, true});
    Rng rng(8);
    for (int i = 0; i < 500; ++i) {
        const Vec3 x(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-0.1, 2));
        const Vec3 y(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-0.1, 2));
        const double dx = scene_sdf(scene, x).distance;
        const double dy = scene_sdf(scene, y).distance;
        CHECK(std::abs(dx - dy) <= (x - y).norm() + 1e-9);
    }
}

TEST_CASE("scene SDF gradient has unit norm away from medial surfaces") {
    const AnalyticScene scene = random_scene(3, {3, false});
    Rng rng(9);
    int tested = 0;
    for (int i = 0; i < 800 && tested < 200; ++i) {
        const Vec3 x(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.02, 2));
        // Keep probes where one primitive clearly dominates (unique nearest).
        double best = 1e9, second = 1e9;
        for (const auto& p : scene.primitives) {
            const double d = p.sdf(x);
            if (d < best) {
                second = best;
                best = d;
            } else {
                second = std::min(second, d);
            }
        }
        if (second - best < 0.05 || std::abs(best) < 0.02) continue;
        ++tested;
        const double h = 1e-4;
        Vec3 g;
        for (int k = 0; k < 3; ++k) {
            Vec3 d = Vec3::Zero();
            d[k] = h;
            g[k] = (scene_sdf(scene, x + d).distance - scene_sdf(scene, x - d).distance) /
                   (2 * h);
        }
        CHECK(std::abs(g.norm() - 1.0) < 1e-3);
    }
    CHECK(tested >= 100);
}

TEST_CASE("center-pixel depth of a sphere 2 m away is 1.5 within 1e-3") {
    const AnalyticScene scene = single_sphere(0.5, Vec3(0, 0, 2));
    const TeacherModel teacher = TeacherModel::create(scene.class_names, 16, 0.0, 8, 1);
    const Intrinsics intr = square_intrinsics(32, 32);
    const PosedFrame f = render_ground_truth_frame(scene, intr, Pose{}, teacher);
    CHECK(std::abs(f.depth_at(16, 16) - 1.5) < 1e-3);
}

TEST_CASE("rays missing all primitives give invalid depth") {
    const AnalyticScene scene = single_sphere(0.2, Vec3(0, 0, 2));
    const TeacherModel teacher = TeacherModel::create(scene.class_names, 16, 0.0, 8, 1);
    const Intrinsics intr = square_intrinsics(32, 32);
    const PosedFrame f = render_ground_truth_frame(scene, intr, Pose{}, teacher);
    CHECK(f.depth_at(0, 0) == 0.0f);       // corner ray misses the small sphere
    CHECK(f.depth_at(16, 16) > 0.0f);      // center ray hits
}

TEST_CASE("sphere-traced depth matches a 10k-step ray-march oracle within 1e-3") {
    const AnalyticScene scene = random_scene(5, {3, false});
    const TeacherModel teacher = TeacherModel::create(scene.class_names, 16, 0.0, 8, 1);
    const Intrinsics intr = square_intrinsics(16, 16);
    const Pose pose = ring_pose(2.0, 1.0, 0.7, Vec3(0, 0, 0.25));
    GtRenderOptions opts;
    opts.with_teacher_features = false;
    const PosedFrame f = render_ground_truth_frame(scene, intr, pose, teacher, opts);

    double worst = 0;
    for (int v = 0; v < 16; ++v)
        for (int u = 0; u < 16; ++u) {
            const Ray ray = ray_through_pixel(intr, pose, u, v);
            const double oracle_t = ray_march_depth(scene, ray);
            const double a = (u - intr.cx) / intr.fx;
            const double b = (v - intr.cy) / intr.fy;
            const double dz = 1.0 / std::sqrt(a * a + b * b + 1.0);
            const double traced_t = f.depth_at(u, v) / dz;
            if (oracle_t > 0 && f.depth_at(u, v) > 0)
                worst = std::max(worst, std::abs(oracle_t - traced_t));
        }
    CHECK(worst < 1e-3);
}

TEST_CASE("rendered depth back-projects onto the zero level set") {
    const AnalyticScene scene = random_scene(11, {3, true});
    const TeacherModel teacher = TeacherModel::create(scene.class_names, 16, 0.0, 8, 1);
    const Intrinsics intr = square_intrinsics(24, 24);
    const Pose pose = ring_pose(1.9, 1.1, 2.2, Vec3(0, 0, 0.25));
    GtRenderOptions opts;
    opts.with_teacher_features = false;
    const PosedFrame f = render_ground_truth_frame(scene, intr, pose, teacher, opts);
    for (int v = 0; v < 24; ++v)
        for (int u = 0; u < 24; ++u) {
            if (f.depth_at(u, v) <= 0) continue;
            const Vec3 p = backproject_pixel(intr, pose, u, v, f.depth_at(u, v));
            CHECK(std::abs(scene_sdf(scene, p).distance) < 1e-3);
        }
}

TEST_CASE("noiseless teacher features equal the class embedding") {
    const TeacherModel teacher = TeacherModel::create({"floor", "ball"}, 16, 0.0, 8, 1);
    std::vector<int> cls(64 * 64, 1);
    const auto feats = teacher_features(cls, 64, 64, teacher, 0);
    const double* e = teacher.embedding(1);
    for (int px = 0; px < 64 * 64; px += 97) {
        double dot = 0;
        for (int k = 0; k < 16; ++k) dot += feats[px * 16 + k] * e[k];
        CHECK(dot == doctest::Approx(1.0).epsilon(1e-5));
    }
}

TEST_CASE("teacher features are block constant over coarseness tiles") {
    const TeacherModel teacher = TeacherModel::create({"floor", "ball"}, 16, 0.05, 8, 1);
    Rng rng(2);
    std::vector<int> cls(64 * 64);
    for (int& c : cls) c = static_cast<int>(rng.uniform_index(2));
    const auto feats = teacher_features(cls, 64, 64, teacher, 5);
    for (int ty = 0; ty < 8; ++ty)
        for (int tx = 0; tx < 8; ++tx) {
            const int base = (ty * 8 * 64 + tx * 8) * 16;
            for (int dy = 0; dy < 8; ++dy)
                for (int dx = 0; dx < 8; ++dx) {
                    const int px = ((ty * 8 + dy) * 64 + tx * 8 + dx) * 16;
                    for (int k = 0; k < 16; ++k) CHECK(feats[px + k] == feats[base + k]);
                }
        }
}

TEST_CASE("noisy teacher keeps mean cosine >= 0.97 over 10^4 pixels") {
    const TeacherModel teacher = TeacherModel::create({"floor", "ball"}, 16, 0.05, 1, 1);
    const int n = 100;  // 100x100 = 10^4 pixels, coarseness 1 => per-pixel noise
    std::vector<int> cls(n * n, 1);
    const auto feats = teacher_features(cls, n, n, teacher, 77);
    const double* e = teacher.embedding(1);
    double acc = 0;
    for (int px = 0; px < n * n; ++px) {
        double dot = 0;
        for (int k = 0; k < 16; ++k) dot += feats[px * 16 + k] * e[k];
        acc += dot;
    }
    CHECK(acc / (n * n) >= 0.97);
}

TEST_CASE("class embeddings are orthonormal when count <= dim") {
    const TeacherModel teacher = TeacherModel::create(kGeneratorClassNames, 16, 0.05, 8, 1);
    for (int i = 0; i < teacher.class_count(); ++i)
        for (int j = 0; j <= i; ++j) {
            double dot = 0;
            for (int k = 0; k < 16; ++k)
                dot += teacher.class_embeddings.at(i, k) * teacher.class_embeddings.at(j, k);
            CHECK(dot == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-6));
        }
}

TEST_CASE("random_scene is bit-deterministic for a fixed seed") {
    const AnalyticScene a = random_scene(7, {4, true});
    const AnalyticScene b = random_scene(7, {4, true});
    CHECK(a.to_json() == b.to_json());
}

TEST_CASE("random_scene produces exactly object_count objects plus the ground plane") {
    const AnalyticScene scene = random_scene(21, {3, false});
    const auto ids = scene.object_ids();
    CHECK(ids.size() == 4);  // ground (0) + 3 objects
    CHECK(scene.primitives.front().shape == ShapeType::Plane);
}

TEST_CASE("mug handle centroid sits at the analytic offset from the body") {
    const AnalyticScene scene = random_scene(13, {3, true});
    const Primitive* body = nullptr;
    const Primitive* handle = nullptr;
    for (const auto& p : scene.primitives) {
        if (scene.class_names[p.part_class_id] == "mug") body = &p;
        if (scene.class_names[p.part_class_id] == "mug handle" && body &&
            p.object_id == body->object_id)
            handle = &p;
    }
    REQUIRE(body != nullptr);
    REQUIRE(handle != nullptr);
    // Handle center = body center + dir * (body radius + handle half length).
    const Vec3 offset = handle->pose.translation - body->pose.translation;
    CHECK(std::abs(offset.z()) < 1e-12);
    CHECK(offset.norm() == doctest::Approx(body->size.x() + handle->size.z()));
}

TEST_CASE("scene JSON round-trips bit-exactly") {
    const AnalyticScene scene = random_scene(99, {4, true});
    const AnalyticScene parsed = AnalyticScene::from_json(scene.to_json());
    CHECK(parsed.to_json() == scene.to_json());
}

TEST_CASE("random_scene rejects invalid object counts") {
    CHECK_THROWS_AS(random_scene(1, {0, false}), Error);
}
