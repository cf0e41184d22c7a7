#pragma once

#include <string>
#include <vector>

#include "pgs/camera/camera.hpp"
#include "pgs/core/image.hpp"
#include "pgs/plenoptic/cloud.hpp"

namespace pgs {

struct RenderConfig {
    double sharpness_n = 10.0;     // exponent on the alignment weight
    double point_radius_px = 1.5;  // splat disc radius in pixels
    Vec3 background{0.0, 0.0, 0.0};

    void validate() const;  // throws std::invalid_argument
};

// View-dependent color of one point seen from `viewer`: per capture camera a
// weight max(0, dot(unit(C_i - P), unit(V - P)))^n, then the weighted mean of
// the view colors. All weights zero falls back to the plain mean.
// point_colors holds n_views RGB triplets. Degenerate geometry (viewer or a
// capture camera exactly at P) throws std::runtime_error.
Vec3 interpolate_color(const Vec3 &point_pos, const double *point_colors,
                       const std::vector<Vec3> &capture_cams, const Vec3 &viewer,
                       double sharpness_n);

// Batched variant over a whole cloud for one viewer; out_rgb is resized to
// size()*3. Bit-identical to calling interpolate_color per point.
void interpolate_colors(const PlenopticPointCloud &cloud, const Vec3 &viewer, double sharpness_n,
                        std::vector<double> &out_rgb);

// Splats each point as a z-buffered filled disc of the interpolated color.
Image render_view(const PlenopticPointCloud &cloud, const CameraIntrinsics &intr,
                  const CameraExtrinsics &extr, const Vec3 &viewer_pos, const RenderConfig &cfg);

struct DatasetManifest {
    struct Entry {
        std::string image_name;
        int camera_id = 0;
    };
    std::vector<Entry> entries;
    std::string colmap_dir;
    Vec3 background;  // the backdrop the views were composited over
};

// Renders every rig camera to out_dir/<image_name>, writes
// out_dir/manifest.json and the COLMAP text model to out_dir/colmap.
DatasetManifest render_dataset(const PlenopticPointCloud &cloud, const CameraSet &rig,
                               const RenderConfig &cfg, const std::string &out_dir);

// Loads a manifest written by render_dataset.
DatasetManifest read_manifest(const std::string &path);

}  // namespace pgs
