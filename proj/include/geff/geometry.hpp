#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "geff/error.hpp"

namespace geff {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Pinhole camera intrinsics, integer pixel coordinates map through fx/fy/cx/cy
// directly (no half-pixel offset).
struct Intrinsics {
    double fx = 0, fy = 0;
    double cx = 0, cy = 0;
    int width = 0, height = 0;

    bool valid() const {
        return fx > 0 && fy > 0 && width > 0 && height > 0 && cx >= 0 && cx < width &&
               cy >= 0 && cy < height;
    }
};

// Camera-to-world rigid transform. Right-handed, camera looks down +z.
struct Pose {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    Vec3 apply(const Vec3& p_cam) const { return rotation * p_cam + translation; }
    Vec3 apply_inverse(const Vec3& p_world) const {
        return rotation.transpose() * (p_world - translation);
    }
    Pose compose(const Pose& rhs) const {
        return Pose{rotation * rhs.rotation, rotation * rhs.translation + translation};
    }
    // Max deviation of R^T R from identity plus |det - 1|.
    double orthonormality_error() const;
};

// Builds a camera-to-world pose positioned at `eye` looking at `target`.
Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3(0, 0, 1));

struct Ray {
    Vec3 origin = Vec3::Zero();
    Vec3 direction = Vec3(0, 0, 1);  // unit norm
};

// One posed RGB-D observation. depth == 0 marks an invalid pixel.
struct PosedFrame {
    int width = 0, height = 0;
    std::vector<float> color;  // H*W*3, row-major, values in [0,1]
    std::vector<float> depth;  // H*W, z-depth in meters, 0 = invalid
    Intrinsics intrinsics;
    Pose pose;
    int teacher_dim = 0;                 // 0 when teacher features absent
    std::vector<float> teacher_features;  // H*W*teacher_dim, unit rows

    bool has_teacher() const { return teacher_dim > 0; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    float depth_at(int u, int v) const { return depth[static_cast<std::size_t>(v) * width + u]; }
    const float* color_at(int u, int v) const {
        return &color[(static_cast<std::size_t>(v) * width + u) * 3];
    }
    const float* teacher_at(int u, int v) const {
        return &teacher_features[(static_cast<std::size_t>(v) * width + u) * teacher_dim];
    }
};

struct BackprojectedPoint {
    Vec3 position;  // world frame
    int u = 0, v = 0;
    Vec3 color = Vec3::Zero();
};

struct ProjectedPixel {
    double u = 0, v = 0;
    double z = 0;  // camera-frame depth, > 0
};

// World-frame ray through the center of pixel (u, v). Throws InvalidPixelError
// when the pixel is out of bounds.
Ray ray_through_pixel(const PosedFrame& frame, int u, int v);
Ray ray_through_pixel(const Intrinsics& intr, const Pose& pose, double u, double v);

// One world point per valid-depth pixel.
std::vector<BackprojectedPoint> backproject(const PosedFrame& frame);

// Single-pixel backprojection (depth as given, not read from the frame).
Vec3 backproject_pixel(const Intrinsics& intr, const Pose& pose, double u, double v, double z);

// Projects a world point; nullopt when the point is at or behind the camera.
std::optional<ProjectedPixel> project(const Vec3& point, const Intrinsics& intr, const Pose& pose);

}  // namespace geff
