#pragma once

#include <string>
#include <vector>

#include "pgs/core/vec.hpp"

namespace pgs {

struct CameraIntrinsics {
    double fx = 0.0, fy = 0.0;  // focal lengths, pixels
    double cx = 0.0, cy = 0.0;  // principal point, pixels
    double skew = 0.0;
    int width = 0, height = 0;

    void validate() const;  // throws std::invalid_argument
};

// Renderer-viewport pose: where the camera sits plus its up/front vectors in
// world coordinates.
struct ViewportPose {
    Vec3 position;
    Vec3 up{0.0, 1.0, 0.0};
    Vec3 front{0.0, 0.0, 1.0};

    void validate() const;  // unit vectors, orthogonal, both within 1e-9
};

// World→camera transform in the COLMAP convention (+X right, +Y down,
// +Z forward): X_cam = R·X_world + t.
struct CameraExtrinsics {
    Quat rotation;  // (w, x, y, z)
    Vec3 translation;

    Mat3 rotation_matrix() const { return rotation.to_matrix(); }
};

struct Camera {
    int id = 0;
    CameraIntrinsics intrinsics;
    CameraExtrinsics extrinsics;
    ViewportPose pose;
    std::string image_name;
};

struct CameraSet {
    std::vector<Camera> cameras;

    size_t size() const { return cameras.size(); }
    const Camera &operator[](size_t i) const { return cameras[i]; }
    Camera &operator[](size_t i) { return cameras[i]; }
};

// Cameras on a Fibonacci-sphere lattice around `center`, all looking inwards.
// Ids are 1-based; image names run view_000.png, view_001.png, ...
CameraSet generate_spherical_rig(int n_cameras, const Vec3 &center, double radius,
                                 const CameraIntrinsics &intrinsics);

// Converts an up/front viewport pose to COLMAP extrinsics: right = front×up,
// down = −up, forward = front; R rows are [right; down; forward];
// t = −R·position. Quaternion is sign-canonicalized.
CameraExtrinsics viewport_to_colmap(const ViewportPose &pose);

struct Projection {
    Vec2 pixel;
    double depth = 0.0;
    bool behind = false;  // depth ≤ 0: pixel is undefined
};

Projection project_point(const CameraIntrinsics &intr, const CameraExtrinsics &extr,
                         const Vec3 &world_point);

// d(pixel)/d(camera-space point), row-major 2x3, evaluated at cam_point.
void projection_jacobian(const CameraIntrinsics &intr, const Vec3 &cam_point, double J[6]);

}  // namespace pgs
