#include <doctest.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <vector>

#include "pgs/camera/camera.hpp"
#include "pgs/core/image.hpp"
#include "pgs/core/rng.hpp"
#include "pgs/render/render.hpp"

using namespace pgs;

namespace {

using V3 = std::array<double, 3>;

// Literal transcription of the interpolation equations, kept independent of
// the production code (its own vector ops, plain arrays).
V3 oracle_interp(const V3 &p, const std::vector<V3> &colors, const std::vector<V3> &cams,
                 const V3 &viewer, double n) {
    auto sub = [](const V3 &a, const V3 &b) { return V3{a[0] - b[0], a[1] - b[1], a[2] - b[2]}; };
    auto unit = [](const V3 &a) {
        const double len = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
        return V3{a[0] / len, a[1] / len, a[2] / len};
    };
    const V3 v = unit(sub(viewer, p));
    double wsum = 0.0;
    V3 out{0, 0, 0};
    for (size_t i = 0; i < cams.size(); ++i) {
        const V3 c = unit(sub(cams[i], p));
        const double d = c[0] * v[0] + c[1] * v[1] + c[2] * v[2];
        const double w = std::pow(std::max(0.0, d), n);
        wsum += w;
        for (int k = 0; k < 3; ++k) out[k] += w * colors[i][k];
    }
    if (wsum == 0.0) {
        V3 mean{0, 0, 0};
        for (const V3 &c : colors)
            for (int k = 0; k < 3; ++k) mean[k] += c[k] / static_cast<double>(colors.size());
        return mean;
    }
    for (int k = 0; k < 3; ++k) out[k] /= wsum;
    return out;
}

PlenopticPointCloud one_point_cloud(const Vec3 &p, const std::vector<Vec3> &cams,
                                    const std::vector<Vec3> &colors) {
    PlenopticPointCloud c;
    c.n_views = static_cast<int>(cams.size());
    c.capture_cameras = cams;
    c.positions = {p};
    for (const Vec3 &col : colors) {
        c.view_colors.push_back(col.x);
        c.view_colors.push_back(col.y);
        c.view_colors.push_back(col.z);
    }
    return c;
}

CameraIntrinsics square_intrinsics(int size, double f) {
    CameraIntrinsics intr;
    intr.fx = intr.fy = f;
    intr.cx = intr.cy = size / 2.0;
    intr.width = intr.height = size;
    return intr;
}

}  // namespace

TEST_CASE("interpolation ignores orthogonal cameras") {
    const double colors[6] = {0.9, 0.1, 0.2, 0.0, 1.0, 0.5};
    const std::vector<Vec3> cams = {{0, 0, 2}, {0, 2, 0}};
    const Vec3 got = interpolate_color({0, 0, 0}, colors, cams, {0, 0, 1}, 10.0);
    CHECK(got.x == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(got.y == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(got.z == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("mirror-symmetric cameras average") {
    const double colors[6] = {1.0, 0.0, 0.0, 0.0, 1.0, 0.0};
    const std::vector<Vec3> cams = {{1, 0, 2}, {-1, 0, 2}};
    const Vec3 got = interpolate_color({0, 0, 0}, colors, cams, {0, 0, 1}, 10.0);
    CHECK(got.x == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(got.y == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("antipodal viewer falls back to the mean") {
    const double colors[3] = {0.3, 0.6, 0.9};
    const std::vector<Vec3> cams = {{0, 0, 2}};
    const Vec3 got = interpolate_color({0, 0, 0}, colors, cams, {0, 0, -1}, 10.0);
    CHECK(got.x == doctest::Approx(0.3));
    CHECK(got.y == doctest::Approx(0.6));
    CHECK(got.z == doctest::Approx(0.9));
}

TEST_CASE("interpolation matches the literal-equation oracle") {
    Rng rng(111);
    for (int it = 0; it < 200; ++it) {
        const int nc = 5;
        const V3 p{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        std::vector<V3> cams(nc), cols(nc);
        std::vector<Vec3> vcams(nc);
        std::vector<double> vcols;
        for (int i = 0; i < nc; ++i) {
            cams[i] = {p[0] + rng.uniform(-3, 3), p[1] + rng.uniform(-3, 3),
                       p[2] + rng.uniform(-3, 3)};
            cols[i] = {rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)};
            vcams[i] = {cams[i][0], cams[i][1], cams[i][2]};
            vcols.insert(vcols.end(), cols[i].begin(), cols[i].end());
        }
        const V3 viewer{p[0] + rng.uniform(-3, 3), p[1] + rng.uniform(-3, 3),
                        p[2] + rng.uniform(-3, 3)};
        const double n = rng.uniform(1.0, 20.0);
        const V3 want = oracle_interp(p, cols, cams, viewer, n);
        const Vec3 got = interpolate_color({p[0], p[1], p[2]}, vcols.data(), vcams,
                                           {viewer[0], viewer[1], viewer[2]}, n);
        CHECK(got.x == doctest::Approx(want[0]).epsilon(1e-12));
        CHECK(got.y == doctest::Approx(want[1]).epsilon(1e-12));
        CHECK(got.z == doctest::Approx(want[2]).epsilon(1e-12));

        // Convex combination: inside the componentwise color range.
        double lo[3] = {1, 1, 1}, hi[3] = {0, 0, 0};
        for (const V3 &c : cols)
            for (int k = 0; k < 3; ++k) {
                lo[k] = std::min(lo[k], c[k]);
                hi[k] = std::max(hi[k], c[k]);
            }
        CHECK(got.x >= lo[0] - 1e-12);
        CHECK(got.x <= hi[0] + 1e-12);
        CHECK(got.y >= lo[1] - 1e-12);
        CHECK(got.y <= hi[1] + 1e-12);
        CHECK(got.z >= lo[2] - 1e-12);
        CHECK(got.z <= hi[2] + 1e-12);
    }
}

TEST_CASE("interpolation is scale invariant in the direction vectors") {
    Rng rng(112);
    const Vec3 p{0.2, -0.4, 1.0};
    std::vector<Vec3> cams;
    std::vector<double> cols;
    for (int i = 0; i < 4; ++i) {
        cams.push_back(p + rng.unit_vec3() * rng.uniform(0.5, 2.0));
        for (int k = 0; k < 3; ++k) cols.push_back(rng.uniform(0, 1));
    }
    const Vec3 viewer = p + rng.unit_vec3() * 1.7;
    const Vec3 base = interpolate_color(p, cols.data(), cams, viewer, 10.0);
    // Push every camera and the viewer out along their own rays.
    std::vector<Vec3> far_cams;
    for (size_t i = 0; i < cams.size(); ++i)
        far_cams.push_back(p + (cams[i] - p) * (3.0 + static_cast<double>(i)));
    const Vec3 far_view = p + (viewer - p) * 9.0;
    const Vec3 got = interpolate_color(p, cols.data(), far_cams, far_view, 10.0);
    CHECK(got.x == doctest::Approx(base.x).epsilon(1e-12));
    CHECK(got.y == doctest::Approx(base.y).epsilon(1e-12));
    CHECK(got.z == doctest::Approx(base.z).epsilon(1e-12));
}

TEST_CASE("large sharpness selects the best-aligned camera") {
    Rng rng(113);
    const Vec3 p{0, 0, 0};
    const std::vector<Vec3> cams = {{0.2, 0.1, 2.0}, {1.5, 0.2, 1.0}, {-1.0, 0.5, 0.7}};
    std::vector<double> cols;
    for (int i = 0; i < 9; ++i) cols.push_back(rng.uniform(0, 1));
    const Vec3 viewer{0.1, 0.05, 1.5};  // closest in angle to camera 0
    const Vec3 got = interpolate_color(p, cols.data(), cams, viewer, 1000.0);
    CHECK(got.x == doctest::Approx(cols[0]).epsilon(1e-3));
    CHECK(got.y == doctest::Approx(cols[1]).epsilon(1e-3));
    CHECK(got.z == doctest::Approx(cols[2]).epsilon(1e-3));
}

TEST_CASE("degenerate geometry is rejected") {
    const double cols[3] = {1, 1, 1};
    const std::vector<Vec3> cams = {{0, 0, 1}};
    CHECK_THROWS_AS(interpolate_color({0, 0, 0}, cols, cams, {0, 0, 0}, 10.0),
                    std::runtime_error);
    const std::vector<Vec3> bad = {{0, 0, 0}};
    CHECK_THROWS_AS(interpolate_color({0, 0, 0}, cols, bad, {0, 0, 1}, 10.0), std::runtime_error);
}

TEST_CASE("batched interpolation is bit-identical to the single-point path") {
    Rng rng(114);
    PlenopticPointCloud cloud;
    cloud.n_views = 6;
    for (int i = 0; i < 6; ++i) cloud.capture_cameras.push_back(rng.unit_vec3() * 3.0);
    const size_t n = 257;  // odd size exercises kernel tails
    for (size_t i = 0; i < n; ++i) cloud.positions.push_back(rng.uniform_vec3(-1, 1));
    for (size_t i = 0; i < n * 6 * 3; ++i) cloud.view_colors.push_back(rng.uniform(0, 1));

    const Vec3 viewer{0.3, 4.0, -0.2};
    std::vector<double> batched;
    interpolate_colors(cloud, viewer, 10.0, batched);
    for (size_t i = 0; i < n; ++i) {
        const Vec3 single = interpolate_color(cloud.positions[i], cloud.color_ptr(i, 0),
                                              cloud.capture_cameras, viewer, 10.0);
        CHECK(batched[i * 3 + 0] == single.x);
        CHECK(batched[i * 3 + 1] == single.y);
        CHECK(batched[i * 3 + 2] == single.z);
    }
}

TEST_CASE("single on-axis point renders as a centered disc") {
    const std::vector<Vec3> cams = {{0, 0, 5}, {3, 0, 4}};
    const Vec3 red{0.8, 0.1, 0.1};
    const PlenopticPointCloud cloud = one_point_cloud({0, 0, 0}, cams, {red, red});
    const CameraIntrinsics intr = square_intrinsics(64, 80.0);
    ViewportPose pose;
    pose.position = {0, 0, 2};
    pose.front = {0, 0, -1};
    pose.up = {0, 1, 0};
    RenderConfig cfg;
    cfg.point_radius_px = 2.5;
    cfg.background = {0.0, 0.2, 0.0};
    const Image img = render_view(cloud, intr, viewport_to_colmap(pose), pose.position, cfg);
    REQUIRE(img.width == 64);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            const double dx = (x + 0.5) - intr.cx;
            const double dy = (y + 0.5) - intr.cy;
            const bool inside = dx * dx + dy * dy <= 2.5 * 2.5;
            if (inside) {
                CHECK(img.at(x, y, 0) == doctest::Approx(red.x).epsilon(1e-12));
                CHECK(img.at(x, y, 1) == doctest::Approx(red.y).epsilon(1e-12));
            } else {
                CHECK(img.at(x, y, 0) == 0.0);
                CHECK(img.at(x, y, 1) == 0.2);
            }
        }
}

TEST_CASE("z-buffer keeps the nearer point") {
    const std::vector<Vec3> cams = {{0, 0, 5}};
    PlenopticPointCloud cloud;
    cloud.n_views = 1;
    cloud.capture_cameras = cams;
    cloud.positions = {{0, 0, 1}, {0, 0, 0}};  // first is nearer to the camera at z=2
    cloud.view_colors = {0.9, 0.0, 0.0, 0.0, 0.0, 0.9};
    const CameraIntrinsics intr = square_intrinsics(32, 40.0);
    ViewportPose pose;
    pose.position = {0, 0, 2};
    pose.front = {0, 0, -1};
    pose.up = {0, 1, 0};
    const Image img =
        render_view(cloud, intr, viewport_to_colmap(pose), pose.position, RenderConfig{});
    CHECK(img.at(16, 16, 0) == doctest::Approx(0.9));
    CHECK(img.at(16, 16, 2) == doctest::Approx(0.0));

    // Swapping the declaration order must not change the winner.
    std::swap(cloud.positions[0], cloud.positions[1]);
    for (int k = 0; k < 3; ++k) std::swap(cloud.view_colors[k], cloud.view_colors[3 + k]);
    const Image img2 =
        render_view(cloud, intr, viewport_to_colmap(pose), pose.position, RenderConfig{});
    CHECK(img2.at(16, 16, 0) == doctest::Approx(0.9));
}

TEST_CASE("empty cloud renders the background") {
    PlenopticPointCloud cloud;
    RenderConfig cfg;
    cfg.background = {0.1, 0.2, 0.3};
    const Image img = render_view(cloud, square_intrinsics(16, 10.0), CameraExtrinsics{},
                                  {0, 0, 0}, cfg);
    for (size_t i = 0; i < img.pixel_count(); ++i) {
        CHECK(img.data[i * 3 + 0] == 0.1);
        CHECK(img.data[i * 3 + 1] == 0.2);
        CHECK(img.data[i * 3 + 2] == 0.3);
    }
}

TEST_CASE("rendering is deterministic") {
    const PlenopticPointCloud cloud =
        synth_plenoptic(SynthShape::sphere, 500, {{3, 0, 0}, {0, 3, 0}, {0, 0, 3}},
                        SynthMaterial{{0.6, 0.4, 0.2}, 0.5, 12.0}, 7);
    const CameraIntrinsics intr = square_intrinsics(48, 40.0);
    const CameraSet rig = generate_spherical_rig(3, {0, 0, 0}, 2.5, intr);
    const Image a = render_view(cloud, intr, rig[1].extrinsics, rig[1].pose.position, {});
    const Image b = render_view(cloud, intr, rig[1].extrinsics, rig[1].pose.position, {});
    CHECK(a.data == b.data);
}

TEST_CASE("missing capture cameras is a configuration error") {
    PlenopticPointCloud cloud;
    cloud.n_views = 1;
    cloud.positions = {{0, 0, 0}};
    cloud.view_colors = {1, 1, 1};
    CHECK_THROWS_AS(
        render_view(cloud, square_intrinsics(8, 4.0), CameraExtrinsics{}, {0, 0, 2}, {}),
        std::runtime_error);
}

TEST_CASE("png round trip preserves quantized pixels") {
    const auto path = std::filesystem::temp_directory_path() / "pgs_png_rt.png";
    Rng rng(115);
    Image img(20, 13);
    for (double &v : img.data) v = static_cast<double>(rng.index(256)) / 255.0;
    write_png(path.string(), img);
    const Image back = read_png(path.string());
    REQUIRE(back.width == 20);
    REQUIRE(back.height == 13);
    CHECK(back.data == img.data);
    CHECK(quantize8(0.0) == 0);
    CHECK(quantize8(1.0) == 255);
    CHECK(quantize8(-2.0) == 0);
    CHECK(quantize8(2.0) == 255);
    CHECK(quantize8(0.5) == 128);  // lround(127.5)
}

TEST_CASE("render_dataset writes images, manifest, and colmap model") {
    const auto dir = std::filesystem::temp_directory_path() / "pgs_dataset";
    std::filesystem::remove_all(dir);

    // Lambertian: zero specular strength makes every view color identical.
    const std::vector<Vec3> caps = {{4, 0, 0}, {0, 4, 0}, {0, 0, 4}, {0, -4, 0}};
    const PlenopticPointCloud cloud = synth_plenoptic(
        SynthShape::sphere, 300, caps, SynthMaterial{{0.7, 0.5, 0.3}, 0.0, 10.0}, 8);

    const CameraIntrinsics intr = square_intrinsics(40, 30.0);
    const CameraSet rig = generate_spherical_rig(44, {0, 0, 0}, 2.2, intr);
    RenderConfig cfg;
    cfg.point_radius_px = 1.5;
    const DatasetManifest manifest = render_dataset(cloud, rig, cfg, dir.string());

    REQUIRE(manifest.entries.size() == 44);
    CHECK(std::filesystem::exists(dir / "view_000.png"));
    CHECK(std::filesystem::exists(dir / "view_043.png"));
    CHECK(std::filesystem::exists(dir / "colmap" / "cameras.txt"));
    CHECK(std::filesystem::exists(dir / "colmap" / "images.txt"));
    CHECK(std::filesystem::exists(dir / "colmap" / "points3D.txt"));

    const DatasetManifest loaded = read_manifest((dir / "manifest.json").string());
    REQUIRE(loaded.entries.size() == 44);
    CHECK(loaded.entries[5].image_name == rig[5].image_name);
    CHECK(loaded.entries[5].camera_id == rig[5].id);
    CHECK(loaded.colmap_dir == manifest.colmap_dir);

    // Lambertian invariance: every non-background pixel carries the base
    // color regardless of the view (quantization slack only).
    int hits = 0;
    for (int v = 0; v < 44; v += 7) {
        char name[32];
        std::snprintf(name, sizeof(name), "view_%03d.png", v);
        const Image img = read_png((dir / name).string());
        for (size_t i = 0; i < img.pixel_count(); ++i) {
            if (img.data[i * 3] == 0.0 && img.data[i * 3 + 1] == 0.0 &&
                img.data[i * 3 + 2] == 0.0)
                continue;  // background
            ++hits;
            CHECK(std::abs(img.data[i * 3 + 0] - 0.7) <= 1.0 / 255.0);
            CHECK(std::abs(img.data[i * 3 + 1] - 0.5) <= 1.0 / 255.0);
            CHECK(std::abs(img.data[i * 3 + 2] - 0.3) <= 1.0 / 255.0);
        }
    }
    CHECK(hits > 100);
}

TEST_CASE("specular point matches material model fed through interpolation") {
    // One specular point at the origin; the rendered pixel must equal the
    // analytic material colors combined through the interpolation oracle.
    SynthMaterial mat;
    mat.base_color = {0.2, 0.2, 0.2};
    mat.specular_strength = 0.7;
    mat.shininess = 6.0;
    std::vector<Vec3> caps;
    Rng rng(116);
    for (int i = 0; i < 6; ++i) caps.push_back(rng.unit_vec3() * 4.0);

    PlenopticPointCloud cloud;
    cloud.n_views = 6;
    cloud.capture_cameras = caps;
    cloud.positions = {{0, 0, 0}};
    std::vector<V3> oracle_cols;
    std::vector<V3> oracle_cams;
    for (const Vec3 &cp : caps) {
        const Vec3 c = synth_material_color(mat, {0, 0, 0}, {0, 0, 1}, cp);
        cloud.view_colors.insert(cloud.view_colors.end(), {c.x, c.y, c.z});
        oracle_cols.push_back({c.x, c.y, c.z});
        oracle_cams.push_back({cp.x, cp.y, cp.z});
    }

    const CameraIntrinsics intr = square_intrinsics(32, 30.0);
    const CameraSet rig = generate_spherical_rig(10, {0, 0, 0}, 3.0, intr);
    const auto dir = std::filesystem::temp_directory_path() / "pgs_specular";
    std::filesystem::remove_all(dir);
    render_dataset(cloud, rig, {}, dir.string());
    for (int v = 0; v < 10; ++v) {
        char name[32];
        std::snprintf(name, sizeof(name), "view_%03d.png", v);
        const Image img = read_png((dir / name).string());
        const Vec3 vp = rig[v].pose.position;
        const V3 want = oracle_interp({0, 0, 0}, oracle_cols, oracle_cams, {vp.x, vp.y, vp.z},
                                      10.0);
        CHECK(std::abs(img.at(16, 16, 0) - want[0]) <= 2.0 / 255.0);
        CHECK(std::abs(img.at(16, 16, 1) - want[1]) <= 2.0 / 255.0);
        CHECK(std::abs(img.at(16, 16, 2) - want[2]) <= 2.0 / 255.0);
    }
}
