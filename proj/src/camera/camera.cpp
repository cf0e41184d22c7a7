#include "pgs/camera/camera.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

namespace pgs {

void CameraIntrinsics::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw std::invalid_argument("intrinsics: focal must be > 0");
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("intrinsics: image size must be positive");
    if (cx < 0.0 || cx > width || cy < 0.0 || cy > height)
        throw std::invalid_argument("intrinsics: principal point outside image");
}

void ViewportPose::validate() const {
    constexpr double tol = 1e-9;
    if (std::abs(up.norm() - 1.0) > tol || std::abs(front.norm() - 1.0) > tol)
        throw std::invalid_argument("viewport pose: up/front must be unit vectors");
    if (std::abs(up.dot(front)) > tol)
        throw std::invalid_argument("viewport pose: up and front must be orthogonal");
}

CameraSet generate_spherical_rig(int n_cameras, const Vec3 &center, double radius,
                                 const CameraIntrinsics &intrinsics) {
    if (n_cameras < 1) throw std::invalid_argument("rig: need at least one camera");
    if (!(radius > 0.0)) throw std::invalid_argument("rig: radius must be > 0");
    intrinsics.validate();

    // Fibonacci lattice with +Y as the polar axis: near-equal-area coverage
    // for any count.
    const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
    CameraSet set;
    set.cameras.reserve(static_cast<size_t>(n_cameras));
    for (int i = 0; i < n_cameras; ++i) {
        const double y = 1.0 - (2.0 * i + 1.0) / n_cameras;
        const double ring = std::sqrt(std::max(0.0, 1.0 - y * y));
        const double phi = golden_angle * i;
        const Vec3 dir{ring * std::cos(phi), y, ring * std::sin(phi)};

        Camera cam;
        cam.id = i + 1;
        cam.intrinsics = intrinsics;
        cam.pose.position = center + dir * radius;
        cam.pose.front = (center - cam.pose.position).normalized();
        // Up = world +Y made orthogonal to front; degenerate at the poles.
        Vec3 up = Vec3{0.0, 1.0, 0.0} - cam.pose.front * cam.pose.front.y;
        if (up.norm() < 1e-9) up = Vec3{1.0, 0.0, 0.0} - cam.pose.front * cam.pose.front.x;
        cam.pose.up = up.normalized();
        cam.pose.validate();
        cam.extrinsics = viewport_to_colmap(cam.pose);

        char name[32];
        std::snprintf(name, sizeof(name), "view_%03d.png", i);
        cam.image_name = name;
        set.cameras.push_back(cam);
    }
    return set;
}

CameraExtrinsics viewport_to_colmap(const ViewportPose &pose) {
    pose.validate();
    const Vec3 right = pose.front.cross(pose.up);
    const Vec3 down = -pose.up;
    const Vec3 forward = pose.front;
    const Mat3 r = Mat3::from_rows(right, down, forward);
    CameraExtrinsics extr;
    extr.rotation = Quat::from_matrix(r);
    extr.translation = -(r * pose.position);
    return extr;
}

Projection project_point(const CameraIntrinsics &intr, const CameraExtrinsics &extr,
                         const Vec3 &world_point) {
    const Vec3 cam = extr.rotation_matrix() * world_point + extr.translation;
    Projection out;
    out.depth = cam.z;
    if (cam.z <= 0.0) {
        out.behind = true;
        return out;
    }
    out.pixel.x = intr.fx * cam.x / cam.z + intr.skew * cam.y / cam.z + intr.cx;
    out.pixel.y = intr.fy * cam.y / cam.z + intr.cy;
    return out;
}

void projection_jacobian(const CameraIntrinsics &intr, const Vec3 &cam_point, double J[6]) {
    const double z = cam_point.z;
    const double inv_z = 1.0 / z;
    const double inv_z2 = inv_z * inv_z;
    J[0] = intr.fx * inv_z;
    J[1] = intr.skew * inv_z;
    J[2] = -(intr.fx * cam_point.x + intr.skew * cam_point.y) * inv_z2;
    J[3] = 0.0;
    J[4] = intr.fy * inv_z;
    J[5] = -intr.fy * cam_point.y * inv_z2;
}

}  // namespace pgs
