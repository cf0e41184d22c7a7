#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "pgs/core/vec.hpp"

namespace pgs {

// Point cloud with one RGB triplet per capture viewpoint per point. Colors are
// held as [0,1] doubles; 8-bit quantization happens only at the PLY boundary.
struct PlenopticPointCloud {
    std::vector<Vec3> positions;
    int n_views = 0;
    std::vector<double> view_colors;     // size = n_points * n_views * 3
    std::vector<Vec3> capture_cameras;   // empty, or one position per view

    size_t size() const { return positions.size(); }

    double *color_ptr(size_t point, int view) {
        return &view_colors[(point * n_views + view) * 3];
    }
    const double *color_ptr(size_t point, int view) const {
        return &view_colors[(point * n_views + view) * 3];
    }
    Vec3 color(size_t point, int view) const {
        const double *c = color_ptr(point, view);
        return {c[0], c[1], c[2]};
    }
    void set_color(size_t point, int view, const Vec3 &c) {
        double *p = color_ptr(point, view);
        p[0] = c.x;
        p[1] = c.y;
        p[2] = c.z;
    }
    Vec3 mean_color(size_t point) const {
        Vec3 acc;
        for (int v = 0; v < n_views; ++v) acc += color(point, v);
        return acc / static_cast<double>(n_views);
    }

    // Throws std::invalid_argument when a structural invariant is broken.
    void validate() const;
};

struct PlenopticMesh {
    PlenopticPointCloud vertices;
    std::vector<std::array<int, 3>> faces;

    bool has_faces() const { return !faces.empty(); }
    void validate() const;
};

enum class SurfaceSampleMode { vertices, face_centers, both };

// Extracts surface points from a mesh: vertex positions, per-face centroids
// with per-view colors averaged over the face corners, or both. A
// subset_fraction below 1 keeps a seeded uniform random subset (at least one
// point when the pool is nonempty).
PlenopticPointCloud surface_samples(const PlenopticMesh &mesh, SurfaceSampleMode mode,
                                    double subset_fraction, uint64_t seed);

enum class SynthShape { sphere, cube };

struct SynthMaterial {
    Vec3 base_color{0.5, 0.5, 0.5};
    double specular_strength = 0.0;  // in [0,1]
    double shininess = 10.0;         // > 0
    Vec3 light_dir{0.577350269189625764509148780502, 0.577350269189625764509148780502,
                   0.577350269189625764509148780502};
};

// Deterministic synthetic plenoptic cloud on a unit sphere or a [-1,1]^3 cube
// surface. Per-view color follows a Phong-style lobe around the light
// direction reflected at the surface normal:
//   color_v = clamp(base + specular * max(0, dot(reflect(light, n), unit(C_v - p)))^shininess)
PlenopticPointCloud synth_plenoptic(SynthShape shape, size_t n_points,
                                    const std::vector<Vec3> &capture_cameras,
                                    const SynthMaterial &material, uint64_t seed);

// The per-view color the generator assigns at position p with normal n;
// exposed so tests can evaluate the material model directly.
Vec3 synth_material_color(const SynthMaterial &material, const Vec3 &p, const Vec3 &normal,
                          const Vec3 &camera);

}  // namespace pgs
