#include "pgs/render/render.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "pgs/camera/colmap.hpp"
#include "pgs/simd/kernels.hpp"

namespace pgs {

void RenderConfig::validate() const {
    if (!(sharpness_n > 0.0)) throw std::invalid_argument("render: sharpness_n must be > 0");
    if (!(point_radius_px > 0.0))
        throw std::invalid_argument("render: point_radius_px must be > 0");
}

Vec3 interpolate_color(const Vec3 &point_pos, const double *point_colors,
                       const std::vector<Vec3> &capture_cams, const Vec3 &viewer,
                       double sharpness_n) {
    if (capture_cams.empty()) throw std::invalid_argument("interpolate: no capture cameras");
    const Vec3 to_viewer = viewer - point_pos;
    if (to_viewer.norm() == 0.0)
        throw std::runtime_error("interpolate: viewer coincides with the point");
    const Vec3 v = to_viewer.normalized();

    // Same operation tree as the batched kernel so both paths agree bitwise.
    double wsum = 0.0;
    Vec3 acc;
    for (size_t i = 0; i < capture_cams.size(); ++i) {
        const double ux = capture_cams[i].x - point_pos.x;
        const double uy = capture_cams[i].y - point_pos.y;
        const double uz = capture_cams[i].z - point_pos.z;
        const double nn = (ux * ux + uy * uy) + uz * uz;
        if (nn == 0.0)
            throw std::runtime_error("interpolate: capture camera coincides with the point");
        const double num = (ux * v.x + uy * v.y) + uz * v.z;
        const double d = num / std::sqrt(nn);
        const double w = std::pow(std::max(0.0, d), sharpness_n);
        wsum += w;
        acc.x += w * point_colors[i * 3 + 0];
        acc.y += w * point_colors[i * 3 + 1];
        acc.z += w * point_colors[i * 3 + 2];
    }
    if (wsum == 0.0) {
        // Viewer is back-facing to every capture camera.
        Vec3 mean;
        for (size_t i = 0; i < capture_cams.size(); ++i) {
            mean.x += point_colors[i * 3 + 0];
            mean.y += point_colors[i * 3 + 1];
            mean.z += point_colors[i * 3 + 2];
        }
        return mean / static_cast<double>(capture_cams.size());
    }
    return acc / wsum;
}

void interpolate_colors(const PlenopticPointCloud &cloud, const Vec3 &viewer, double sharpness_n,
                        std::vector<double> &out_rgb) {
    const size_t n = cloud.size();
    out_rgb.assign(n * 3, 0.0);
    if (n == 0) return;
    if (cloud.capture_cameras.empty())
        throw std::runtime_error("interpolate: cloud has no capture camera positions");

    // Per-point unit directions towards the viewer, SoA for the kernel.
    std::vector<double> px(n), py(n), pz(n), vx(n), vy(n), vz(n);
    for (size_t i = 0; i < n; ++i) {
        const Vec3 &p = cloud.positions[i];
        const Vec3 to_viewer = viewer - p;
        if (to_viewer.norm() == 0.0)
            throw std::runtime_error("interpolate: viewer coincides with a point");
        const Vec3 v = to_viewer.normalized();
        px[i] = p.x;
        py[i] = p.y;
        pz[i] = p.z;
        vx[i] = v.x;
        vy[i] = v.y;
        vz[i] = v.z;
    }

    std::vector<double> d(n), wsum(n, 0.0);
    for (int cam = 0; cam < cloud.n_views; ++cam) {
        simd::aligned_dot(cloud.capture_cameras[cam], px.data(), py.data(), pz.data(), vx.data(),
                          vy.data(), vz.data(), n, d.data());
        for (size_t i = 0; i < n; ++i) {
            if (!std::isfinite(d[i]))
                throw std::runtime_error(
                    "interpolate: capture camera coincides with a point");
            const double w = std::pow(std::max(0.0, d[i]), sharpness_n);
            const double *c = cloud.color_ptr(i, cam);
            wsum[i] += w;
            out_rgb[i * 3 + 0] += w * c[0];
            out_rgb[i * 3 + 1] += w * c[1];
            out_rgb[i * 3 + 2] += w * c[2];
        }
    }
    for (size_t i = 0; i < n; ++i) {
        if (wsum[i] == 0.0) {
            Vec3 mean;
            for (int cam = 0; cam < cloud.n_views; ++cam) {
                const double *c = cloud.color_ptr(i, cam);
                mean.x += c[0];
                mean.y += c[1];
                mean.z += c[2];
            }
            mean = mean / static_cast<double>(cloud.n_views);
            out_rgb[i * 3 + 0] = mean.x;
            out_rgb[i * 3 + 1] = mean.y;
            out_rgb[i * 3 + 2] = mean.z;
        } else {
            out_rgb[i * 3 + 0] /= wsum[i];
            out_rgb[i * 3 + 1] /= wsum[i];
            out_rgb[i * 3 + 2] /= wsum[i];
        }
    }
}

Image render_view(const PlenopticPointCloud &cloud, const CameraIntrinsics &intr,
                  const CameraExtrinsics &extr, const Vec3 &viewer_pos, const RenderConfig &cfg) {
    cfg.validate();
    intr.validate();
    cloud.validate();
    if (cloud.size() > 0 && cloud.capture_cameras.empty())
        throw std::runtime_error("render: cloud has no capture camera positions");

    Image img(intr.width, intr.height, cfg.background.x, cfg.background.y, cfg.background.z);
    if (cloud.size() == 0) return img;

    std::vector<double> colors;
    interpolate_colors(cloud, viewer_pos, cfg.sharpness_n, colors);

    std::vector<double> zbuf(img.pixel_count(), std::numeric_limits<double>::infinity());
    const double r = cfg.point_radius_px;
    const double r2 = r * r;
    for (size_t i = 0; i < cloud.size(); ++i) {
        const Projection pr = project_point(intr, extr, cloud.positions[i]);
        if (pr.behind) continue;
        // Pixel centers sit at (ix+0.5, iy+0.5); cover centers within r.
        const int x0 = std::max(0, static_cast<int>(std::ceil(pr.pixel.x - r - 0.5)));
        const int x1 = std::min(intr.width - 1, static_cast<int>(std::floor(pr.pixel.x + r - 0.5)));
        const int y0 = std::max(0, static_cast<int>(std::ceil(pr.pixel.y - r - 0.5)));
        const int y1 =
            std::min(intr.height - 1, static_cast<int>(std::floor(pr.pixel.y + r - 0.5)));
        for (int y = y0; y <= y1; ++y) {
            const double dy = (y + 0.5) - pr.pixel.y;
            for (int x = x0; x <= x1; ++x) {
                const double dx = (x + 0.5) - pr.pixel.x;
                if (dx * dx + dy * dy > r2) continue;
                const size_t k = static_cast<size_t>(y) * intr.width + x;
                // Strict < keeps the lower point index on depth ties.
                if (pr.depth < zbuf[k]) {
                    zbuf[k] = pr.depth;
                    img.data[k * 3 + 0] = colors[i * 3 + 0];
                    img.data[k * 3 + 1] = colors[i * 3 + 1];
                    img.data[k * 3 + 2] = colors[i * 3 + 2];
                }
            }
        }
    }
    return img;
}

DatasetManifest render_dataset(const PlenopticPointCloud &cloud, const CameraSet &rig,
                               const RenderConfig &cfg, const std::string &out_dir) {
    std::filesystem::create_directories(out_dir);
    DatasetManifest manifest;
    manifest.colmap_dir = (std::filesystem::path(out_dir) / "colmap").string();
    manifest.background = cfg.background;

    for (const Camera &cam : rig.cameras) {
        const Image img =
            render_view(cloud, cam.intrinsics, cam.extrinsics, cam.pose.position, cfg);
        write_png((std::filesystem::path(out_dir) / cam.image_name).string(), img);
        manifest.entries.push_back({cam.image_name, cam.id});
    }
    colmap::export_model(rig, cloud, manifest.colmap_dir);

    nlohmann::json j;
    j["colmap_dir"] = manifest.colmap_dir;
    j["background"] = {cfg.background.x, cfg.background.y, cfg.background.z};
    j["images"] = nlohmann::json::array();
    for (const auto &e : manifest.entries)
        j["images"].push_back({{"name", e.image_name}, {"camera_id", e.camera_id}});
    std::ofstream out(std::filesystem::path(out_dir) / "manifest.json");
    if (!out) throw std::runtime_error("render: cannot write manifest.json");
    out << j.dump(2) << "\n";
    return manifest;
}

DatasetManifest read_manifest(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("render: cannot open manifest " + path);
    nlohmann::json j;
    in >> j;
    DatasetManifest manifest;
    manifest.colmap_dir = j.at("colmap_dir").get<std::string>();
    if (j.contains("background")) {
        const auto &bg = j.at("background");
        manifest.background = {bg.at(0).get<double>(), bg.at(1).get<double>(),
                               bg.at(2).get<double>()};
    }
    for (const auto &e : j.at("images"))
        manifest.entries.push_back(
            {e.at("name").get<std::string>(), e.at("camera_id").get<int>()});
    return manifest;
}

}  // namespace pgs
