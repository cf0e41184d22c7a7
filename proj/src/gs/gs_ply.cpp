#include "pgs/gs/gs_ply.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace pgs::gs_ply {

namespace {

[[noreturn]] void fail(const std::string &msg) { throw std::runtime_error("gs_ply: " + msg); }

void put_f32(std::string &out, double v) {
    const float f = static_cast<float>(v);
    char buf[4];
    std::memcpy(buf, &f, 4);
    out.append(buf, 4);
}

std::vector<std::string> property_names(int rest_count) {
    std::vector<std::string> names = {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1",
                                      "f_dc_2"};
    for (int i = 0; i < rest_count; ++i) names.push_back("f_rest_" + std::to_string(i));
    names.push_back("opacity");
    names.push_back("scale_0");
    names.push_back("scale_1");
    names.push_back("scale_2");
    names.push_back("rot_0");
    names.push_back("rot_1");
    names.push_back("rot_2");
    names.push_back("rot_3");
    return names;
}

}  // namespace

std::string to_bytes(const GaussianModel &model) {
    model.validate();
    const int coeffs = model.coeff_count();
    const int rest = (coeffs - 1) * 3;

    std::ostringstream header;
    header << "ply\nformat binary_little_endian 1.0\n";
    header << "element vertex " << model.size() << "\n";
    for (const std::string &name : property_names(rest))
        header << "property float " << name << "\n";
    header << "end_header\n";

    std::string out = header.str();
    out.reserve(out.size() + model.size() * (9 + rest + 8) * 4);
    for (size_t i = 0; i < model.size(); ++i) {
        const Vec3 &p = model.means[i];
        put_f32(out, p.x);
        put_f32(out, p.y);
        put_f32(out, p.z);
        put_f32(out, 0.0);
        put_f32(out, 0.0);
        put_f32(out, 0.0);
        const double *sh = model.sh_ptr(i);
        put_f32(out, sh[0]);
        put_f32(out, sh[1]);
        put_f32(out, sh[2]);
        // Higher-order coefficients are channel-major in the file.
        for (int ch = 0; ch < 3; ++ch)
            for (int k = 1; k < coeffs; ++k) put_f32(out, sh[k * 3 + ch]);
        put_f32(out, model.opacity_logits[i]);
        put_f32(out, model.log_scales[i].x);
        put_f32(out, model.log_scales[i].y);
        put_f32(out, model.log_scales[i].z);
        const Quat &q = model.rotations[i];
        put_f32(out, q.w);
        put_f32(out, q.x);
        put_f32(out, q.y);
        put_f32(out, q.z);
    }
    return out;
}

void write(std::ostream &out, const GaussianModel &model) {
    const std::string bytes = to_bytes(model);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

void write_file(const std::string &path, const GaussianModel &model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot open for writing: " + path);
    write(out, model);
}

GaussianModel read(std::istream &in) {
    std::string line;
    if (!std::getline(in, line) || line != "ply") fail("missing 'ply' magic");
    if (!std::getline(in, line) || line != "format binary_little_endian 1.0")
        fail("expected binary little-endian format");

    size_t count = 0;
    std::vector<std::string> props;
    bool ended = false;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "comment") continue;
        if (tok == "element") {
            std::string name;
            if (!(ls >> name >> count) || name != "vertex")
                fail("expected a single vertex element");
        } else if (tok == "property") {
            std::string type, name;
            if (!(ls >> type >> name) || type != "float")
                fail("expected only float properties");
            props.push_back(name);
        } else if (tok == "end_header") {
            ended = true;
            break;
        } else {
            fail("unknown header token: " + tok);
        }
    }
    if (!ended) fail("missing end_header");

    // The property list must match the canonical layout exactly; f_rest count
    // determines the degree.
    if (props.size() < 17) fail("unknown property layout");
    const int rest = static_cast<int>(props.size()) - 17;
    int degree = -1;
    for (int d = 0; d <= 3; ++d)
        if (rest == ((d + 1) * (d + 1) - 1) * 3) degree = d;
    if (degree < 0) fail("f_rest count " + std::to_string(rest) + " matches no SH degree");
    const std::vector<std::string> want = property_names(rest);
    for (size_t i = 0; i < want.size(); ++i)
        if (props[i] != want[i])
            fail("unknown property layout at '" + props[i] + "' (expected '" + want[i] + "')");

    GaussianModel model;
    model.sh_degree = degree;
    model.resize(count);
    const int coeffs = model.coeff_count();
    std::vector<float> row(props.size());
    for (size_t i = 0; i < count; ++i) {
        in.read(reinterpret_cast<char *>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(float)));
        if (!in) fail("unexpected end of splat payload");
        model.means[i] = {row[0], row[1], row[2]};
        double *sh = model.sh_ptr(i);
        sh[0] = row[6];
        sh[1] = row[7];
        sh[2] = row[8];
        for (int ch = 0; ch < 3; ++ch)
            for (int k = 1; k < coeffs; ++k)
                sh[k * 3 + ch] = row[9 + ch * (coeffs - 1) + (k - 1)];
        const size_t base = 9 + static_cast<size_t>(rest);
        model.opacity_logits[i] = row[base];
        model.log_scales[i] = {row[base + 1], row[base + 2], row[base + 3]};
        model.rotations[i] = {row[base + 4], row[base + 5], row[base + 6], row[base + 7]};
    }
    return model;
}

GaussianModel read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open " + path);
    return read(in);
}

GaussianModel from_bytes(const std::string &bytes) {
    std::istringstream in(bytes);
    return read(in);
}

}  // namespace pgs::gs_ply
