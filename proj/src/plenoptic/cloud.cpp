#include "pgs/plenoptic/cloud.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pgs/core/rng.hpp"

namespace pgs {

void PlenopticPointCloud::validate() const {
    if (n_views < 0) throw std::invalid_argument("cloud: negative view count");
    if (!positions.empty() && n_views == 0)
        throw std::invalid_argument("cloud: points present but no views");
    if (view_colors.size() != positions.size() * static_cast<size_t>(n_views) * 3)
        throw std::invalid_argument("cloud: color array size mismatch");
    if (!capture_cameras.empty() && capture_cameras.size() != static_cast<size_t>(n_views))
        throw std::invalid_argument("cloud: capture camera count does not match view count");
    for (const Vec3 &p : positions)
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
            throw std::invalid_argument("cloud: non-finite position");
    for (double c : view_colors)
        if (!(c >= 0.0 && c <= 1.0))
            throw std::invalid_argument("cloud: color component outside [0,1]");
}

void PlenopticMesh::validate() const {
    vertices.validate();
    const auto n = static_cast<int>(vertices.size());
    for (const auto &f : faces) {
        for (int k = 0; k < 3; ++k)
            if (f[k] < 0 || f[k] >= n)
                throw std::invalid_argument("mesh: face index out of range");
        if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2])
            throw std::invalid_argument("mesh: degenerate face");
    }
}

PlenopticPointCloud surface_samples(const PlenopticMesh &mesh, SurfaceSampleMode mode,
                                    double subset_fraction, uint64_t seed) {
    mesh.validate();
    if (!(subset_fraction > 0.0 && subset_fraction <= 1.0))
        throw std::invalid_argument("surface_samples: subset_fraction must be in (0,1]");

    const PlenopticPointCloud &verts = mesh.vertices;
    PlenopticPointCloud pool;
    pool.n_views = verts.n_views;
    pool.capture_cameras = verts.capture_cameras;

    const bool take_vertices =
        mode == SurfaceSampleMode::vertices || mode == SurfaceSampleMode::both;
    const bool take_faces =
        mode == SurfaceSampleMode::face_centers || mode == SurfaceSampleMode::both;

    if (take_vertices) {
        pool.positions = verts.positions;
        pool.view_colors = verts.view_colors;
    }
    if (take_faces) {
        for (const auto &f : mesh.faces) {
            const Vec3 centroid =
                (verts.positions[f[0]] + verts.positions[f[1]] + verts.positions[f[2]]) / 3.0;
            pool.positions.push_back(centroid);
            for (int v = 0; v < verts.n_views; ++v) {
                const Vec3 c =
                    (verts.color(f[0], v) + verts.color(f[1], v) + verts.color(f[2], v)) / 3.0;
                pool.view_colors.push_back(c.x);
                pool.view_colors.push_back(c.y);
                pool.view_colors.push_back(c.z);
            }
        }
    }

    if (subset_fraction >= 1.0 || pool.positions.empty()) return pool;

    const auto total = pool.positions.size();
    const auto keep = std::max<size_t>(
        1, static_cast<size_t>(std::llround(subset_fraction * static_cast<double>(total))));
    Rng rng(seed);
    std::vector<size_t> picked = rng.sample_indices(total, keep);
    std::sort(picked.begin(), picked.end());

    PlenopticPointCloud out;
    out.n_views = pool.n_views;
    out.capture_cameras = pool.capture_cameras;
    out.positions.reserve(picked.size());
    out.view_colors.reserve(picked.size() * static_cast<size_t>(pool.n_views) * 3);
    for (size_t i : picked) {
        out.positions.push_back(pool.positions[i]);
        const double *c = pool.color_ptr(i, 0);
        out.view_colors.insert(out.view_colors.end(), c, c + pool.n_views * 3);
    }
    return out;
}

Vec3 synth_material_color(const SynthMaterial &material, const Vec3 &p, const Vec3 &normal,
                          const Vec3 &camera) {
    const Vec3 n = normal.normalized();
    const Vec3 l = material.light_dir.normalized();
    const Vec3 reflected = n * (2.0 * n.dot(l)) - l;
    const Vec3 view = (camera - p).normalized();
    const double lobe = std::pow(std::max(0.0, reflected.dot(view)), material.shininess);
    const double s = material.specular_strength * lobe;
    return {clamp01(material.base_color.x + s), clamp01(material.base_color.y + s),
            clamp01(material.base_color.z + s)};
}

PlenopticPointCloud synth_plenoptic(SynthShape shape, size_t n_points,
                                    const std::vector<Vec3> &capture_cameras,
                                    const SynthMaterial &material, uint64_t seed) {
    if (capture_cameras.empty())
        throw std::invalid_argument("synth_plenoptic: need at least one capture camera");

    PlenopticPointCloud cloud;
    cloud.n_views = static_cast<int>(capture_cameras.size());
    cloud.capture_cameras = capture_cameras;
    cloud.positions.reserve(n_points);
    cloud.view_colors.resize(n_points * capture_cameras.size() * 3);

    Rng rng(seed);
    std::vector<Vec3> normals;
    normals.reserve(n_points);
    for (size_t i = 0; i < n_points; ++i) {
        if (shape == SynthShape::sphere) {
            const Vec3 n = rng.unit_vec3();
            cloud.positions.push_back(n);
            normals.push_back(n);
        } else {
            // Random point on the surface of the [-1,1]^3 cube: pick a face,
            // then a uniform position on it.
            const size_t face = rng.index(6);
            const double u = rng.uniform(-1.0, 1.0);
            const double v = rng.uniform(-1.0, 1.0);
            const int axis = static_cast<int>(face / 2);
            const double sign = (face % 2 == 0) ? 1.0 : -1.0;
            Vec3 p, n;
            if (axis == 0) {
                p = {sign, u, v};
                n = {sign, 0.0, 0.0};
            } else if (axis == 1) {
                p = {u, sign, v};
                n = {0.0, sign, 0.0};
            } else {
                p = {u, v, sign};
                n = {0.0, 0.0, sign};
            }
            cloud.positions.push_back(p);
            normals.push_back(n);
        }
    }
    for (size_t i = 0; i < n_points; ++i) {
        for (int v = 0; v < cloud.n_views; ++v) {
            const Vec3 c = synth_material_color(material, cloud.positions[i], normals[i],
                                                capture_cameras[static_cast<size_t>(v)]);
            cloud.set_color(i, v, c);
        }
    }
    cloud.validate();
    return cloud;
}

}  // namespace pgs
