#include <doctest.h>

#include <cmath>
#include <cstring>
#include <sstream>
#include <string>
#include <vector>

#include "pgs/core/rng.hpp"
#include "pgs/plenoptic/cloud.hpp"
#include "pgs/plenoptic/ply.hpp"

using namespace pgs;

namespace {

// Cloud with float-representable positions and byte-representable colors, so
// a PLY round trip has no quantization slack to hide behind.
PlenopticPointCloud exact_cloud(size_t n, int views, uint64_t seed) {
    Rng rng(seed);
    PlenopticPointCloud c;
    c.n_views = views;
    c.positions.resize(n);
    c.view_colors.resize(n * views * 3);
    for (auto &p : c.positions) {
        p.x = static_cast<float>(rng.uniform(-5.0, 5.0));
        p.y = static_cast<float>(rng.uniform(-5.0, 5.0));
        p.z = static_cast<float>(rng.uniform(-5.0, 5.0));
    }
    for (auto &v : c.view_colors) v = static_cast<double>(rng.index(256)) / 255.0;
    return c;
}

}  // namespace

TEST_CASE("plenoptic ply binary round trip is exact") {
    PlenopticPointCloud c = exact_cloud(101, 4, 31);
    c.capture_cameras = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {-1, 0, 0}};
    std::stringstream buf;
    ply::write_plenoptic(buf, c);
    const PlenopticMesh back = ply::read_plenoptic(buf);
    REQUIRE(back.vertices.size() == c.size());
    REQUIRE(back.vertices.n_views == 4);
    REQUIRE(!back.has_faces());
    for (size_t i = 0; i < c.size(); ++i) {
        CHECK(back.vertices.positions[i].x == c.positions[i].x);
        CHECK(back.vertices.positions[i].y == c.positions[i].y);
        CHECK(back.vertices.positions[i].z == c.positions[i].z);
    }
    CHECK(back.vertices.view_colors == c.view_colors);
    REQUIRE(back.vertices.capture_cameras.size() == 4);
    CHECK(back.vertices.capture_cameras[2].z == 1.0f);
}

TEST_CASE("write is byte-stable") {
    const PlenopticPointCloud c = exact_cloud(37, 2, 77);
    CHECK(ply::to_bytes(c) == ply::to_bytes(c));
}

TEST_CASE("mesh round trip keeps faces") {
    PlenopticMesh mesh;
    mesh.vertices = exact_cloud(8, 1, 5);
    mesh.faces = {{0, 1, 2}, {2, 3, 4}, {4, 5, 6}};
    std::stringstream buf;
    ply::write_plenoptic(buf, mesh);
    const PlenopticMesh back = ply::read_plenoptic(buf);
    REQUIRE(back.faces.size() == 3);
    CHECK(back.faces[1][0] == 2);
    CHECK(back.faces[1][1] == 3);
    CHECK(back.faces[1][2] == 4);
}

TEST_CASE("ascii ply with per-view colors parses") {
    const std::string text =
        "ply\n"
        "format ascii 1.0\n"
        "comment two points, two views\n"
        "element vertex 2\n"
        "property float x\n"
        "property float y\n"
        "property float z\n"
        "property uchar red_0\n"
        "property uchar green_0\n"
        "property uchar blue_0\n"
        "property uchar red_1\n"
        "property uchar green_1\n"
        "property uchar blue_1\n"
        "end_header\n"
        "0 0 0 255 0 0 0 255 0\n"
        "1 2 3 10 20 30 40 50 60\n";
    std::istringstream in(text);
    const PlenopticMesh mesh = ply::read_plenoptic(in);
    REQUIRE(mesh.vertices.size() == 2);
    REQUIRE(mesh.vertices.n_views == 2);
    CHECK(mesh.vertices.color(0, 0).x == doctest::Approx(1.0));
    CHECK(mesh.vertices.color(0, 1).y == doctest::Approx(1.0));
    CHECK(mesh.vertices.color(1, 1).z == doctest::Approx(60.0 / 255.0));
    CHECK(mesh.vertices.positions[1].z == doctest::Approx(3.0));
}

TEST_CASE("plain rgb ply is treated as a single view") {
    const std::string text =
        "ply\nformat ascii 1.0\n"
        "element vertex 1\n"
        "property float x\nproperty float y\nproperty float z\n"
        "property uchar red\nproperty uchar green\nproperty uchar blue\n"
        "end_header\n"
        "0.5 0.5 0.5 128 64 32\n";
    std::istringstream in(text);
    const PlenopticMesh mesh = ply::read_plenoptic(in);
    CHECK(mesh.vertices.n_views == 1);
    CHECK(mesh.vertices.color(0, 0).x == doctest::Approx(128.0 / 255.0));
}

TEST_CASE("unknown extra properties are skipped") {
    const std::string text =
        "ply\nformat ascii 1.0\n"
        "element vertex 1\n"
        "property float x\nproperty float y\nproperty float z\n"
        "property float confidence\n"
        "property uchar red_0\nproperty uchar green_0\nproperty uchar blue_0\n"
        "end_header\n"
        "1 2 3 0.9 7 8 9\n";
    std::istringstream in(text);
    const PlenopticMesh mesh = ply::read_plenoptic(in);
    CHECK(mesh.vertices.size() == 1);
    CHECK(mesh.vertices.color(0, 0).z == doctest::Approx(9.0 / 255.0));
}

TEST_CASE("missing channel for a view is rejected") {
    // red_1 exists but blue_1 does not.
    const std::string text =
        "ply\nformat ascii 1.0\n"
        "element vertex 1\n"
        "property float x\nproperty float y\nproperty float z\n"
        "property uchar red_0\nproperty uchar green_0\nproperty uchar blue_0\n"
        "property uchar red_1\nproperty uchar green_1\n"
        "end_header\n"
        "0 0 0 1 2 3 4 5\n";
    std::istringstream in(text);
    CHECK_THROWS_WITH_AS(ply::read_plenoptic(in),
                         doctest::Contains("inconsistent view color attributes"),
                         std::runtime_error);
}

TEST_CASE("non-contiguous view indices are rejected") {
    const std::string text =
        "ply\nformat ascii 1.0\n"
        "element vertex 0\n"
        "property float x\nproperty float y\nproperty float z\n"
        "property uchar red_0\nproperty uchar green_0\nproperty uchar blue_0\n"
        "property uchar red_2\nproperty uchar green_2\nproperty uchar blue_2\n"
        "end_header\n";
    std::istringstream in(text);
    CHECK_THROWS_WITH_AS(ply::read_plenoptic(in), doctest::Contains("not contiguous"),
                         std::runtime_error);
}

TEST_CASE("malformed headers are rejected") {
    {
        std::istringstream in("nope\n");
        CHECK_THROWS_AS(ply::read_plenoptic(in), std::runtime_error);
    }
    {
        std::istringstream in("ply\nformat binary_big_endian 1.0\nend_header\n");
        CHECK_THROWS_AS(ply::read_plenoptic(in), std::runtime_error);
    }
    {
        // Property before any element.
        std::istringstream in("ply\nformat ascii 1.0\nproperty float x\nend_header\n");
        CHECK_THROWS_AS(ply::read_plenoptic(in), std::runtime_error);
    }
    {
        // Header never ends.
        std::istringstream in("ply\nformat ascii 1.0\nelement vertex 1\n");
        CHECK_THROWS_AS(ply::read_plenoptic(in), std::runtime_error);
    }
}

TEST_CASE("truncated binary payload is rejected") {
    const PlenopticPointCloud c = exact_cloud(10, 1, 9);
    std::string bytes = ply::to_bytes(c);
    bytes.resize(bytes.size() - 5);
    std::istringstream in(bytes);
    CHECK_THROWS_WITH_AS(ply::read_plenoptic(in), doctest::Contains("unexpected end"),
                         std::runtime_error);
}

TEST_CASE("face index out of range is rejected") {
    const std::string text =
        "ply\nformat ascii 1.0\n"
        "element vertex 3\n"
        "property float x\nproperty float y\nproperty float z\n"
        "property uchar red_0\nproperty uchar green_0\nproperty uchar blue_0\n"
        "element face 1\n"
        "property list uchar int vertex_indices\n"
        "end_header\n"
        "0 0 0 1 1 1\n1 0 0 1 1 1\n0 1 0 1 1 1\n"
        "3 0 1 5\n";
    std::istringstream in(text);
    CHECK_THROWS_WITH_AS(ply::read_plenoptic(in), doctest::Contains("out of range"),
                         std::runtime_error);
}

TEST_CASE("non-triangular face is rejected") {
    const std::string text =
        "ply\nformat ascii 1.0\n"
        "element vertex 4\n"
        "property float x\nproperty float y\nproperty float z\n"
        "property uchar red_0\nproperty uchar green_0\nproperty uchar blue_0\n"
        "element face 1\n"
        "property list uchar int vertex_indices\n"
        "end_header\n"
        "0 0 0 1 1 1\n1 0 0 1 1 1\n0 1 0 1 1 1\n1 1 0 1 1 1\n"
        "4 0 1 2 3\n";
    std::istringstream in(text);
    CHECK_THROWS_WITH_AS(ply::read_plenoptic(in), doctest::Contains("triangular"),
                         std::runtime_error);
}

TEST_CASE("non-uchar color property is rejected") {
    const std::string text =
        "ply\nformat ascii 1.0\n"
        "element vertex 0\n"
        "property float x\nproperty float y\nproperty float z\n"
        "property float red_0\nproperty uchar green_0\nproperty uchar blue_0\n"
        "end_header\n";
    std::istringstream in(text);
    CHECK_THROWS_WITH_AS(ply::read_plenoptic(in), doctest::Contains("must be uchar"),
                         std::runtime_error);
}

TEST_CASE("empty cloud round trips") {
    PlenopticPointCloud c;
    c.n_views = 2;
    std::stringstream buf;
    ply::write_plenoptic(buf, c);
    const PlenopticMesh back = ply::read_plenoptic(buf);
    CHECK(back.vertices.size() == 0);
    CHECK(back.vertices.n_views == 2);
}

TEST_CASE("surface_samples vertices mode copies the vertex cloud") {
    PlenopticMesh mesh;
    mesh.vertices = exact_cloud(20, 2, 13);
    mesh.faces = {{0, 1, 2}};
    const PlenopticPointCloud s =
        surface_samples(mesh, SurfaceSampleMode::vertices, 1.0, 1);
    CHECK(s.size() == 20);
    CHECK(s.view_colors == mesh.vertices.view_colors);
}

TEST_CASE("surface_samples face mode averages corners") {
    PlenopticMesh mesh;
    mesh.vertices = exact_cloud(3, 1, 13);
    mesh.faces = {{0, 1, 2}};
    const PlenopticPointCloud s =
        surface_samples(mesh, SurfaceSampleMode::face_centers, 1.0, 1);
    REQUIRE(s.size() == 1);
    const Vec3 ref_p = (mesh.vertices.positions[0] + mesh.vertices.positions[1] +
                        mesh.vertices.positions[2]) /
                       3.0;
    CHECK(s.positions[0].x == doctest::Approx(ref_p.x));
    const Vec3 ref_c =
        (mesh.vertices.color(0, 0) + mesh.vertices.color(1, 0) + mesh.vertices.color(2, 0)) / 3.0;
    CHECK(s.color(0, 0).y == doctest::Approx(ref_c.y));

    const PlenopticPointCloud both = surface_samples(mesh, SurfaceSampleMode::both, 1.0, 1);
    CHECK(both.size() == 4);
}

TEST_CASE("surface_samples subset is deterministic and resizes") {
    PlenopticMesh mesh;
    mesh.vertices = exact_cloud(100, 1, 99);
    const PlenopticPointCloud a = surface_samples(mesh, SurfaceSampleMode::vertices, 0.25, 7);
    const PlenopticPointCloud b = surface_samples(mesh, SurfaceSampleMode::vertices, 0.25, 7);
    CHECK(a.size() == 25);
    CHECK(a.positions.size() == b.positions.size());
    CHECK(a.view_colors == b.view_colors);
    const PlenopticPointCloud c = surface_samples(mesh, SurfaceSampleMode::vertices, 0.25, 8);
    CHECK(c.size() == 25);
    // Tiny fraction still keeps at least one point.
    const PlenopticPointCloud d = surface_samples(mesh, SurfaceSampleMode::vertices, 1e-9, 7);
    CHECK(d.size() == 1);
    CHECK_THROWS_AS(surface_samples(mesh, SurfaceSampleMode::vertices, 0.0, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(surface_samples(mesh, SurfaceSampleMode::vertices, 1.5, 1),
                    std::invalid_argument);
}

TEST_CASE("cloud validation catches structural errors") {
    PlenopticPointCloud c = exact_cloud(4, 2, 3);
    CHECK_NOTHROW(c.validate());
    c.view_colors.pop_back();
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = exact_cloud(4, 2, 3);
    c.view_colors[0] = 1.5;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = exact_cloud(4, 2, 3);
    c.capture_cameras = {{0, 0, 0}};
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("synth sphere colors match the material model") {
    SynthMaterial mat;
    mat.base_color = {0.2, 0.3, 0.4};
    mat.specular_strength = 0.5;
    mat.shininess = 8.0;
    const std::vector<Vec3> cams = {{3, 0, 0}, {0, 3, 0}, {-3, 0, 0}};
    const PlenopticPointCloud c = synth_plenoptic(SynthShape::sphere, 50, cams, mat, 44);
    REQUIRE(c.size() == 50);
    REQUIRE(c.n_views == 3);
    REQUIRE(c.capture_cameras.size() == 3);
    for (size_t i = 0; i < c.size(); ++i) {
        // Sphere points sit on the unit sphere and double as their own normals.
        CHECK(c.positions[i].norm() == doctest::Approx(1.0).epsilon(1e-12));
        for (int v = 0; v < 3; ++v) {
            // Independent recomputation of the documented shading model.
            const Vec3 n = c.positions[i].normalized();
            const Vec3 l = mat.light_dir.normalized();
            const Vec3 r = n * (2.0 * n.dot(l)) - l;
            const Vec3 view = (cams[v] - c.positions[i]).normalized();
            const double s =
                mat.specular_strength * std::pow(std::max(0.0, r.dot(view)), mat.shininess);
            const Vec3 expect{clamp01(mat.base_color.x + s), clamp01(mat.base_color.y + s),
                              clamp01(mat.base_color.z + s)};
            CHECK(c.color(i, v).x == doctest::Approx(expect.x).epsilon(1e-12));
            CHECK(c.color(i, v).y == doctest::Approx(expect.y).epsilon(1e-12));
            CHECK(c.color(i, v).z == doctest::Approx(expect.z).epsilon(1e-12));
        }
    }
    // Specular material must actually vary across views somewhere.
    bool varies = false;
    for (size_t i = 0; i < c.size() && !varies; ++i)
        if (std::abs(c.color(i, 0).x - c.color(i, 2).x) > 1e-3) varies = true;
    CHECK(varies);
}

TEST_CASE("synth cube points lie on the cube surface") {
    const PlenopticPointCloud c =
        synth_plenoptic(SynthShape::cube, 200, {{4, 4, 4}}, SynthMaterial{}, 9);
    for (const Vec3 &p : c.positions) {
        const double m =
            std::max({std::abs(p.x), std::abs(p.y), std::abs(p.z)});
        CHECK(m == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("synth is seed-deterministic") {
    const std::vector<Vec3> cams = {{2, 1, 0}};
    const PlenopticPointCloud a = synth_plenoptic(SynthShape::sphere, 64, cams, {}, 123);
    const PlenopticPointCloud b = synth_plenoptic(SynthShape::sphere, 64, cams, {}, 123);
    CHECK(ply::to_bytes(a) == ply::to_bytes(b));
    CHECK_THROWS_AS(synth_plenoptic(SynthShape::sphere, 8, {}, {}, 1), std::invalid_argument);
}
