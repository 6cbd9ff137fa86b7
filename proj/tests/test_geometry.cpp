#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "geff/geometry.hpp"
#include "geff/rng.hpp"

using namespace geff;

namespace {

PosedFrame make_frame(int size = 64, double focal = 100, double c = 32) {
    PosedFrame f;
    f.width = f.height = size;
    f.intrinsics = {focal, focal, c, c, size, size};
    f.color.assign(static_cast<std::size_t>(size) * size * 3, 0.5f);
    f.depth.assign(static_cast<std::size_t>(size) * size, 0.f);
    return f;
}

}  // namespace

TEST_CASE("ray through optical axis is +z under identity pose") {
    PosedFrame f = make_frame();
    const Ray r = ray_through_pixel(f, 32, 32);
    CHECK(r.direction.x() == doctest::Approx(0.0));
    CHECK(r.direction.y() == doctest::Approx(0.0));
    CHECK(r.direction.z() == doctest::Approx(1.0));
    CHECK(r.origin.norm() == doctest::Approx(0.0));
}

TEST_CASE("ray through off-axis pixel has analytic pinhole direction") {
    PosedFrame f = make_frame(256, 100, 32);
    const Ray r = ray_through_pixel(f, 132, 32);
    CHECK(r.direction.x() == doctest::Approx(0.7071).epsilon(1e-4));
    CHECK(r.direction.y() == doctest::Approx(0.0));
    CHECK(r.direction.z() == doctest::Approx(0.7071).epsilon(1e-4));
}

TEST_CASE("rotating the pose 180 degrees about y flips the optical axis") {
    PosedFrame f = make_frame();
    f.pose.rotation << -1, 0, 0, 0, 1, 0, 0, 0, -1;
    const Ray r = ray_through_pixel(f, 32, 32);
    CHECK(r.direction.z() == doctest::Approx(-1.0));
}

TEST_CASE("out-of-bounds pixel raises InvalidPixel") {
    PosedFrame f = make_frame();
    CHECK_THROWS_AS(ray_through_pixel(f, -1, 0), InvalidPixelError);
    CHECK_THROWS_AS(ray_through_pixel(f, 0, 64), InvalidPixelError);
}

TEST_CASE("backproject principal point lands on the optical axis") {
    PosedFrame f = make_frame();
    f.depth[32 * 64 + 32] = 2.0f;
    const auto points = backproject(f);
    REQUIRE(points.size() == 1);
    CHECK(points[0].position.x() == doctest::Approx(0.0));
    CHECK(points[0].position.y() == doctest::Approx(0.0));
    CHECK(points[0].position.z() == doctest::Approx(2.0));
}

TEST_CASE("backproject off-axis pixel x coordinate is z*(u-cx)/fx") {
    PosedFrame f = make_frame(256, 100, 32);
    f.depth[32 * 256 + 132] = 1.0f;
    const auto points = backproject(f);
    REQUIRE(points.size() == 1);
    CHECK(points[0].position.x() == doctest::Approx(1.0));
}

TEST_CASE("all-invalid depth backprojects to the empty set") {
    PosedFrame f = make_frame();
    CHECK(backproject(f).empty());
}

TEST_CASE("project is Behind for points at or behind the camera") {
    PosedFrame f = make_frame();
    CHECK_FALSE(project(Vec3(0, 0, -1), f.intrinsics, f.pose).has_value());
    CHECK_FALSE(project(Vec3(0.5, 0.5, 0), f.intrinsics, f.pose).has_value());
}

TEST_CASE("project of an on-axis point hits the principal point") {
    PosedFrame f = make_frame();
    const auto px = project(Vec3(0, 0, 2), f.intrinsics, f.pose);
    REQUIRE(px.has_value());
    CHECK(px->u == doctest::Approx(32.0));
    CHECK(px->v == doctest::Approx(32.0));
    CHECK(px->z == doctest::Approx(2.0));
}

TEST_CASE("project(backproject) round trips within 1e-6 under a general pose") {
    Rng rng(11);
    PosedFrame f = make_frame();
    // Non-trivial pose: rotation about a skew axis plus translation.
    const Vec3 axis = Vec3(0.3, -0.5, 0.8).normalized();
    const double angle = 0.7;
    f.pose.rotation = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    f.pose.translation = Vec3(0.4, -1.2, 0.3);
    REQUIRE(f.pose.orthonormality_error() < 1e-9);

    for (int trial = 0; trial < 200; ++trial) {
        const int u = static_cast<int>(rng.uniform_index(f.width));
        const int v = static_cast<int>(rng.uniform_index(f.height));
        const double z = rng.uniform(0.2, 5.0);
        const Vec3 world = backproject_pixel(f.intrinsics, f.pose, u, v, z);
        const auto px = project(world, f.intrinsics, f.pose);
        REQUIRE(px.has_value());
        CHECK(std::abs(px->u - u) < 1e-6);
        CHECK(std::abs(px->v - v) < 1e-6);
        CHECK(std::abs(px->z - z) < 1e-6);
    }
}

TEST_CASE("ray directions are unit and composition preserves orthonormality") {
    Rng rng(3);
    PosedFrame f = make_frame();
    Pose pose;
    for (int i = 0; i < 50; ++i) {
        const Vec3 axis =
            Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
        Pose step;
        step.rotation = Eigen::AngleAxisd(rng.uniform(-1, 1), axis).toRotationMatrix();
        step.translation = Vec3(rng.normal(), rng.normal(), rng.normal());
        pose = pose.compose(step);
        CHECK(pose.orthonormality_error() < 1e-6);

        f.pose = pose;
        const Ray ray = ray_through_pixel(f, static_cast<int>(rng.uniform_index(64)),
                                          static_cast<int>(rng.uniform_index(64)));
        CHECK(std::abs(ray.direction.norm() - 1.0) < 1e-9);
    }
}

TEST_CASE("look_at produces a valid camera-to-world pose facing the target") {
    const Pose pose = look_at(Vec3(2, 0, 1), Vec3(0, 0, 0.25));
    CHECK(pose.orthonormality_error() < 1e-9);
    const Vec3 forward = pose.rotation.col(2);
    const Vec3 expected = (Vec3(0, 0, 0.25) - Vec3(2, 0, 1)).normalized();
    CHECK((forward - expected).norm() < 1e-9);
}
