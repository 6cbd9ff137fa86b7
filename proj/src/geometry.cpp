#include "geff/geometry.hpp"

#include <cmath>

namespace geff {

double Pose::orthonormality_error() const {
    const Mat3 rtr = rotation.transpose() * rotation;
    const double dev = (rtr - Mat3::Identity()).cwiseAbs().maxCoeff();
    return dev + std::abs(rotation.determinant() - 1.0);
}

Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
    Vec3 forward = (target - eye).normalized();
    Vec3 right = forward.cross(up);
    if (right.norm() < 1e-9) {
        // Viewing direction parallel to up; pick another reference.
        right = forward.cross(Vec3(0, 1, 0));
        if (right.norm() < 1e-9) right = forward.cross(Vec3(1, 0, 0));
    }
    right.normalize();
    const Vec3 down = forward.cross(right);  // +y in image points "down" in world
    Mat3 rot;
    rot.col(0) = right;
    rot.col(1) = down;
    rot.col(2) = forward;
    return Pose{rot, eye};
}

Ray ray_through_pixel(const Intrinsics& intr, const Pose& pose, double u, double v) {
    const Vec3 dir_cam((u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0);
    return Ray{pose.translation, (pose.rotation * dir_cam).normalized()};
}

Ray ray_through_pixel(const PosedFrame& frame, int u, int v) {
    if (u < 0 || u >= frame.width || v < 0 || v >= frame.height) {
        throw InvalidPixelError("pixel (" + std::to_string(u) + ", " + std::to_string(v) +
                                ") outside " + std::to_string(frame.width) + "x" +
                                std::to_string(frame.height) + " frame");
    }
    return ray_through_pixel(frame.intrinsics, frame.pose, u, v);
}

Vec3 backproject_pixel(const Intrinsics& intr, const Pose& pose, double u, double v, double z) {
    const Vec3 p_cam((u - intr.cx) * z / intr.fx, (v - intr.cy) * z / intr.fy, z);
    return pose.apply(p_cam);
}

std::vector<BackprojectedPoint> backproject(const PosedFrame& frame) {
    std::vector<BackprojectedPoint> out;
    out.reserve(frame.pixel_count());
    for (int v = 0; v < frame.height; ++v) {
        for (int u = 0; u < frame.width; ++u) {
            const float z = frame.depth_at(u, v);
            if (z <= 0) continue;
            BackprojectedPoint p;
            p.position = backproject_pixel(frame.intrinsics, frame.pose, u, v, z);
            p.u = u;
            p.v = v;
            const float* c = frame.color_at(u, v);
            p.color = Vec3(c[0], c[1], c[2]);
            out.push_back(p);
        }
    }
    return out;
}

std::optional<ProjectedPixel> project(const Vec3& point, const Intrinsics& intr, const Pose& pose) {
    const Vec3 p_cam = pose.apply_inverse(point);
    if (p_cam.z() <= 0) return std::nullopt;
    ProjectedPixel px;
    px.u = intr.fx * p_cam.x() / p_cam.z() + intr.cx;
    px.v = intr.fy * p_cam.y() / p_cam.z() + intr.cy;
    px.z = p_cam.z();
    return px;
}

}  // namespace geff
