#include "pgs/camera/colmap.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pgs::colmap {

namespace {

[[noreturn]] void fail(const std::string &msg) { throw std::runtime_error("colmap: " + msg); }

std::string fmt(double v) {
    if (v == 0.0) v = 0.0;  // drop the sign of negative zero
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

bool same_intrinsics(const CameraIntrinsics &a, const CameraIntrinsics &b) {
    return a.fx == b.fx && a.fy == b.fy && a.cx == b.cx && a.cy == b.cy && a.width == b.width &&
           a.height == b.height;
}

// Strips comments; returns false at end of file.
bool next_data_line(std::istream &in, std::string &line, size_t &line_no) {
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        size_t i = line.find_first_not_of(" \t");
        if (i == std::string::npos) continue;
        if (line[i] == '#') continue;
        return true;
    }
    return false;
}

}  // namespace

void export_model(const CameraSet &cameras, const PlenopticPointCloud &points,
                  const std::string &out_dir) {
    std::filesystem::create_directories(out_dir);

    // Deduplicate intrinsics into PINHOLE camera records.
    std::vector<CameraIntrinsics> unique;
    std::vector<int> cam_of_image(cameras.size());
    for (size_t i = 0; i < cameras.size(); ++i) {
        const CameraIntrinsics &intr = cameras[i].intrinsics;
        if (intr.skew != 0.0) fail("nonzero skew cannot be exported as a PINHOLE model");
        int id = -1;
        for (size_t k = 0; k < unique.size(); ++k)
            if (same_intrinsics(unique[k], intr)) id = static_cast<int>(k);
        if (id < 0) {
            id = static_cast<int>(unique.size());
            unique.push_back(intr);
        }
        cam_of_image[i] = id + 1;
    }

    {
        std::ofstream out(out_dir + "/cameras.txt");
        if (!out) fail("cannot write cameras.txt");
        out << "# Camera list with one line of data per camera:\n";
        out << "#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n";
        for (size_t k = 0; k < unique.size(); ++k) {
            const CameraIntrinsics &c = unique[k];
            out << (k + 1) << " PINHOLE " << c.width << " " << c.height << " " << fmt(c.fx) << " "
                << fmt(c.fy) << " " << fmt(c.cx) << " " << fmt(c.cy) << "\n";
        }
    }
    {
        std::ofstream out(out_dir + "/images.txt");
        if (!out) fail("cannot write images.txt");
        out << "# Image list with two lines of data per image:\n";
        out << "#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n";
        out << "#   POINTS2D[] as (X, Y, POINT3D_ID)\n";
        for (size_t i = 0; i < cameras.size(); ++i) {
            const Camera &cam = cameras[i];
            const Quat q = cam.extrinsics.rotation.canonical();
            const Vec3 t = cam.extrinsics.translation;
            out << cam.id << " " << fmt(q.w) << " " << fmt(q.x) << " " << fmt(q.y) << " "
                << fmt(q.z) << " " << fmt(t.x) << " " << fmt(t.y) << " " << fmt(t.z) << " "
                << cam_of_image[i] << " " << cam.image_name << "\n";
            out << "\n";  // no 2D observations
        }
    }
    {
        std::ofstream out(out_dir + "/points3D.txt");
        if (!out) fail("cannot write points3D.txt");
        out << "# 3D point list with one line of data per point:\n";
        out << "#   POINT3D_ID, X, Y, Z, R, G, B, ERROR, TRACK[] as (IMAGE_ID, POINT2D_IDX)\n";
        for (size_t i = 0; i < points.size(); ++i) {
            const Vec3 p = points.positions[i];
            const Vec3 c = points.mean_color(i);
            out << (i + 1) << " " << fmt(p.x) << " " << fmt(p.y) << " " << fmt(p.z) << " "
                << std::lround(clamp01(c.x) * 255.0) << " " << std::lround(clamp01(c.y) * 255.0)
                << " " << std::lround(clamp01(c.z) * 255.0) << " 0\n";
        }
    }
}

std::vector<PointEntry> import_points(const std::string &model_dir) {
    const std::string path = model_dir + "/points3D.txt";
    std::ifstream in(path);
    if (!in) fail("cannot open " + path);
    std::vector<PointEntry> out;
    std::string line;
    size_t line_no = 0;
    while (next_data_line(in, line, line_no)) {
        std::istringstream ls(line);
        PointEntry p;
        double err;
        if (!(ls >> p.id >> p.xyz.x >> p.xyz.y >> p.xyz.z >> p.rgb[0] >> p.rgb[1] >> p.rgb[2] >>
              err))
            fail("points3D.txt:" + std::to_string(line_no) + ": expected at least 8 fields");
        out.push_back(p);
    }
    return out;
}

TextModel read_model(const std::string &model_dir) {
    TextModel model;
    {
        const std::string path = model_dir + "/cameras.txt";
        std::ifstream in(path);
        if (!in) fail("cannot open " + path);
        std::string line;
        size_t line_no = 0;
        while (next_data_line(in, line, line_no)) {
            std::istringstream ls(line);
            CameraEntry e;
            std::string mdl;
            if (!(ls >> e.camera_id >> mdl >> e.intrinsics.width >> e.intrinsics.height))
                fail("cameras.txt:" + std::to_string(line_no) + ": malformed camera line");
            if (mdl != "PINHOLE")
                fail("cameras.txt:" + std::to_string(line_no) + ": unsupported model " + mdl);
            if (!(ls >> e.intrinsics.fx >> e.intrinsics.fy >> e.intrinsics.cx >> e.intrinsics.cy))
                fail("cameras.txt:" + std::to_string(line_no) + ": PINHOLE needs 4 params");
            model.cameras.push_back(e);
        }
    }
    {
        const std::string path = model_dir + "/images.txt";
        std::ifstream in(path);
        if (!in) fail("cannot open " + path);
        std::string line;
        size_t line_no = 0;
        while (next_data_line(in, line, line_no)) {
            std::istringstream ls(line);
            ImageEntry e;
            Quat &q = e.extrinsics.rotation;
            Vec3 &t = e.extrinsics.translation;
            if (!(ls >> e.image_id >> q.w >> q.x >> q.y >> q.z >> t.x >> t.y >> t.z >>
                  e.camera_id >> e.name))
                fail("images.txt:" + std::to_string(line_no) + ": malformed image line");
            model.images.push_back(e);
            // The observations line follows immediately; it may be blank, so
            // consume it raw rather than through the comment filter.
            if (!std::getline(in, line) && !in.eof())
                fail("images.txt:" + std::to_string(line_no) + ": missing observations line");
            ++line_no;
        }
    }
    model.points = import_points(model_dir);
    return model;
}

}  // namespace pgs::colmap
