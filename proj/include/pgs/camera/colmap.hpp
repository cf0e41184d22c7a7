#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pgs/camera/camera.hpp"
#include "pgs/plenoptic/cloud.hpp"

namespace pgs::colmap {

struct PointEntry {
    uint64_t id = 0;
    Vec3 xyz;
    std::array<int, 3> rgb{0, 0, 0};
};

struct ImageEntry {
    int image_id = 0;
    CameraExtrinsics extrinsics;
    int camera_id = 0;
    std::string name;
};

struct CameraEntry {
    int camera_id = 0;
    CameraIntrinsics intrinsics;  // PINHOLE: skew stays 0
};

struct TextModel {
    std::vector<CameraEntry> cameras;
    std::vector<ImageEntry> images;
    std::vector<PointEntry> points;
};

// Writes cameras.txt / images.txt / points3D.txt into out_dir (created if
// missing). Point color is the mean over views, quantized to bytes. Only the
// PINHOLE model is emitted; nonzero skew is an error.
void export_model(const CameraSet &cameras, const PlenopticPointCloud &points,
                  const std::string &out_dir);

// Reads points3D.txt only; parse failures mention file and line number.
std::vector<PointEntry> import_points(const std::string &model_dir);

// Full text-model reader (used for round trips and by training init).
TextModel read_model(const std::string &model_dir);

}  // namespace pgs::colmap
