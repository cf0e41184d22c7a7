#include "pgs/plenoptic/ply.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace pgs::ply {

namespace {

enum class PropType { i8, u8, i16, u16, i32, u32, f32, f64 };

size_t type_size(PropType t) {
    switch (t) {
        case PropType::i8:
        case PropType::u8: return 1;
        case PropType::i16:
        case PropType::u16: return 2;
        case PropType::i32:
        case PropType::u32:
        case PropType::f32: return 4;
        case PropType::f64: return 8;
    }
    return 0;
}

std::optional<PropType> parse_type(const std::string &s) {
    if (s == "char" || s == "int8") return PropType::i8;
    if (s == "uchar" || s == "uint8") return PropType::u8;
    if (s == "short" || s == "int16") return PropType::i16;
    if (s == "ushort" || s == "uint16") return PropType::u16;
    if (s == "int" || s == "int32") return PropType::i32;
    if (s == "uint" || s == "uint32") return PropType::u32;
    if (s == "float" || s == "float32") return PropType::f32;
    if (s == "double" || s == "float64") return PropType::f64;
    return std::nullopt;
}

struct Property {
    std::string name;
    PropType type = PropType::f32;
    bool is_list = false;
    PropType count_type = PropType::u8;
    std::vector<double> values;              // scalar column
    std::vector<std::vector<double>> lists;  // list column
};

struct Element {
    std::string name;
    size_t count = 0;
    std::vector<Property> props;

    const Property *find(const std::string &prop_name) const {
        for (const auto &p : props)
            if (p.name == prop_name) return &p;
        return nullptr;
    }
};

struct PlyFile {
    bool binary = false;
    std::vector<Element> elements;

    const Element *find(const std::string &name) const {
        for (const auto &e : elements)
            if (e.name == name) return &e;
        return nullptr;
    }
};

[[noreturn]] void fail(const std::string &msg) { throw std::runtime_error("ply: " + msg); }

double read_binary_value(std::istream &in, PropType t) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char *>(buf), static_cast<std::streamsize>(type_size(t)));
    if (!in) fail("unexpected end of binary payload");
    switch (t) {
        case PropType::i8: return static_cast<double>(static_cast<int8_t>(buf[0]));
        case PropType::u8: return static_cast<double>(buf[0]);
        case PropType::i16: {
            int16_t v;
            std::memcpy(&v, buf, 2);
            return v;
        }
        case PropType::u16: {
            uint16_t v;
            std::memcpy(&v, buf, 2);
            return v;
        }
        case PropType::i32: {
            int32_t v;
            std::memcpy(&v, buf, 4);
            return v;
        }
        case PropType::u32: {
            uint32_t v;
            std::memcpy(&v, buf, 4);
            return v;
        }
        case PropType::f32: {
            float v;
            std::memcpy(&v, buf, 4);
            return v;
        }
        case PropType::f64: {
            double v;
            std::memcpy(&v, buf, 8);
            return v;
        }
    }
    fail("bad property type");
}

double read_ascii_value(std::istream &in) {
    double v;
    if (!(in >> v)) fail("unexpected end of ascii payload");
    return v;
}

PlyFile read_ply(std::istream &in) {
    PlyFile file;
    std::string line;
    if (!std::getline(in, line)) fail("empty stream");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "ply") fail("missing 'ply' magic");

    bool have_format = false;
    bool ended = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok.empty() || tok == "comment" || tok == "obj_info") continue;
        if (tok == "format") {
            std::string fmt, ver;
            ls >> fmt >> ver;
            if (fmt == "ascii")
                file.binary = false;
            else if (fmt == "binary_little_endian")
                file.binary = true;
            else
                fail("unsupported format: " + fmt);
            have_format = true;
        } else if (tok == "element") {
            Element e;
            if (!(ls >> e.name >> e.count)) fail("malformed element line");
            file.elements.push_back(std::move(e));
        } else if (tok == "property") {
            if (file.elements.empty()) fail("property before any element");
            Property p;
            std::string t1;
            ls >> t1;
            if (t1 == "list") {
                std::string ct, vt;
                if (!(ls >> ct >> vt >> p.name)) fail("malformed list property");
                auto c = parse_type(ct), v = parse_type(vt);
                if (!c || !v) fail("unknown property type in list");
                p.is_list = true;
                p.count_type = *c;
                p.type = *v;
            } else {
                auto t = parse_type(t1);
                if (!t) fail("unknown property type: " + t1);
                p.type = *t;
                if (!(ls >> p.name)) fail("property missing name");
            }
            file.elements.back().props.push_back(std::move(p));
        } else if (tok == "end_header") {
            ended = true;
            break;
        } else {
            fail("unknown header token: " + tok);
        }
    }
    if (!ended) fail("missing end_header");
    if (!have_format) fail("missing format line");

    for (auto &elem : file.elements) {
        for (auto &p : elem.props) {
            if (p.is_list)
                p.lists.resize(elem.count);
            else
                p.values.reserve(elem.count);
        }
        for (size_t row = 0; row < elem.count; ++row) {
            for (auto &p : elem.props) {
                if (p.is_list) {
                    const double nd = file.binary ? read_binary_value(in, p.count_type)
                                                  : read_ascii_value(in);
                    const auto n = static_cast<size_t>(nd);
                    auto &lst = p.lists[row];
                    lst.resize(n);
                    for (size_t k = 0; k < n; ++k)
                        lst[k] = file.binary ? read_binary_value(in, p.type)
                                             : read_ascii_value(in);
                } else {
                    p.values.push_back(file.binary ? read_binary_value(in, p.type)
                                                   : read_ascii_value(in));
                }
            }
        }
    }
    return file;
}

// Splits "red_3" against prefix "red_" into view index 3.
std::optional<int> view_index(const std::string &name, const std::string &prefix) {
    if (name.size() <= prefix.size() || name.compare(0, prefix.size(), prefix) != 0)
        return std::nullopt;
    int idx = 0;
    for (size_t i = prefix.size(); i < name.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(name[i]))) return std::nullopt;
        idx = idx * 10 + (name[i] - '0');
    }
    return idx;
}

void write_f32(std::string &out, float v) {
    char buf[4];
    std::memcpy(buf, &v, 4);
    out.append(buf, 4);
}

void write_u8(std::string &out, uint8_t v) { out.push_back(static_cast<char>(v)); }

void write_i32(std::string &out, int32_t v) {
    char buf[4];
    std::memcpy(buf, &v, 4);
    out.append(buf, 4);
}

}  // namespace

PlenopticMesh read_plenoptic(std::istream &in, const ViewColorNaming &naming) {
    const PlyFile file = read_ply(in);
    const Element *vertex = file.find("vertex");
    if (!vertex) fail("no vertex element");

    const Property *px = vertex->find("x");
    const Property *py = vertex->find("y");
    const Property *pz = vertex->find("z");
    if (!px || !py || !pz) fail("vertex element lacks x/y/z");

    // Collect per-view color channels following the naming pattern.
    std::map<int, std::array<const Property *, 3>> channels;
    for (const auto &p : vertex->props) {
        for (int c = 0; c < 3; ++c) {
            const std::string &prefix =
                c == 0 ? naming.red : (c == 1 ? naming.green : naming.blue);
            if (auto idx = view_index(p.name, prefix)) {
                if (channels[*idx][c] != nullptr)
                    fail("duplicate view color attribute: " + p.name);
                channels[*idx][c] = &p;
            }
        }
    }
    if (channels.empty()) {
        // Plain RGB cloud: treat as a single view.
        const Property *r = vertex->find("red");
        const Property *g = vertex->find("green");
        const Property *b = vertex->find("blue");
        if (!r || !g || !b) fail("no per-view color attributes found");
        channels[0] = {r, g, b};
    }
    int expected = 0;
    for (const auto &[idx, chan] : channels) {
        if (idx != expected)
            fail("view color indices not contiguous from 0 (missing view " +
                 std::to_string(expected) + ")");
        for (int c = 0; c < 3; ++c) {
            if (chan[c] == nullptr)
                fail("inconsistent view color attributes for view " + std::to_string(idx));
            if (chan[c]->is_list || chan[c]->type != PropType::u8)
                fail("view color property must be uchar: " + chan[c]->name);
        }
        ++expected;
    }

    PlenopticMesh mesh;
    PlenopticPointCloud &cloud = mesh.vertices;
    const size_t n = vertex->count;
    cloud.n_views = static_cast<int>(channels.size());
    cloud.positions.resize(n);
    cloud.view_colors.resize(n * channels.size() * 3);
    for (size_t i = 0; i < n; ++i)
        cloud.positions[i] = {px->values[i], py->values[i], pz->values[i]};
    for (const auto &[idx, chan] : channels) {
        for (size_t i = 0; i < n; ++i) {
            double *dst = cloud.color_ptr(i, idx);
            for (int c = 0; c < 3; ++c) {
                const double raw = chan[c]->values[i];
                if (raw < 0.0 || raw > 255.0) fail("color component out of byte range");
                dst[c] = raw / 255.0;
            }
        }
    }

    if (const Element *cams = file.find("capture_camera")) {
        const Property *cx = cams->find("x");
        const Property *cy = cams->find("y");
        const Property *cz = cams->find("z");
        if (!cx || !cy || !cz) fail("capture_camera element lacks x/y/z");
        if (cams->count != channels.size())
            fail("capture_camera count does not match view count");
        cloud.capture_cameras.resize(cams->count);
        for (size_t i = 0; i < cams->count; ++i)
            cloud.capture_cameras[i] = {cx->values[i], cy->values[i], cz->values[i]};
    }

    if (const Element *face = file.find("face")) {
        const Property *fi = face->find("vertex_indices");
        if (!fi) fi = face->find("vertex_index");
        if (!fi || !fi->is_list) fail("face element lacks a vertex index list");
        mesh.faces.reserve(face->count);
        for (size_t f = 0; f < face->count; ++f) {
            const auto &lst = fi->lists[f];
            if (lst.size() != 3) fail("only triangular faces are supported");
            std::array<int, 3> tri;
            for (int k = 0; k < 3; ++k) {
                const double v = lst[k];
                if (v < 0 || v >= static_cast<double>(n))
                    fail("face index out of range in face " + std::to_string(f));
                tri[k] = static_cast<int>(v);
            }
            if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
                fail("degenerate face " + std::to_string(f));
            mesh.faces.push_back(tri);
        }
    }
    mesh.validate();
    return mesh;
}

PlenopticMesh read_plenoptic_file(const std::string &path, const ViewColorNaming &naming) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open " + path);
    return read_plenoptic(in, naming);
}

namespace {

std::string plenoptic_bytes(const PlenopticPointCloud &cloud,
                            const std::vector<std::array<int, 3>> *faces,
                            const ViewColorNaming &naming) {
    cloud.validate();
    std::ostringstream header;
    header << "ply\nformat binary_little_endian 1.0\n";
    header << "element vertex " << cloud.size() << "\n";
    header << "property float x\nproperty float y\nproperty float z\n";
    for (int v = 0; v < cloud.n_views; ++v) {
        header << "property uchar " << naming.red << v << "\n";
        header << "property uchar " << naming.green << v << "\n";
        header << "property uchar " << naming.blue << v << "\n";
    }
    if (!cloud.capture_cameras.empty()) {
        header << "element capture_camera " << cloud.capture_cameras.size() << "\n";
        header << "property float x\nproperty float y\nproperty float z\n";
    }
    if (faces && !faces->empty()) {
        header << "element face " << faces->size() << "\n";
        header << "property list uchar int vertex_indices\n";
    }
    header << "end_header\n";

    std::string out = header.str();
    out.reserve(out.size() + cloud.size() * (12 + cloud.n_views * 3));
    for (size_t i = 0; i < cloud.size(); ++i) {
        const Vec3 &p = cloud.positions[i];
        write_f32(out, static_cast<float>(p.x));
        write_f32(out, static_cast<float>(p.y));
        write_f32(out, static_cast<float>(p.z));
        for (int v = 0; v < cloud.n_views; ++v) {
            const double *c = cloud.color_ptr(i, v);
            for (int k = 0; k < 3; ++k)
                write_u8(out, static_cast<uint8_t>(std::lround(clamp01(c[k]) * 255.0)));
        }
    }
    for (const Vec3 &c : cloud.capture_cameras) {
        write_f32(out, static_cast<float>(c.x));
        write_f32(out, static_cast<float>(c.y));
        write_f32(out, static_cast<float>(c.z));
    }
    if (faces) {
        for (const auto &f : *faces) {
            write_u8(out, 3);
            for (int k = 0; k < 3; ++k) write_i32(out, f[k]);
        }
    }
    return out;
}

}  // namespace

void write_plenoptic(std::ostream &out, const PlenopticPointCloud &cloud,
                     const ViewColorNaming &naming) {
    const std::string bytes = plenoptic_bytes(cloud, nullptr, naming);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

void write_plenoptic(std::ostream &out, const PlenopticMesh &mesh, const ViewColorNaming &naming) {
    mesh.validate();
    const std::string bytes = plenoptic_bytes(mesh.vertices, &mesh.faces, naming);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

void write_plenoptic_file(const std::string &path, const PlenopticPointCloud &cloud,
                          const ViewColorNaming &naming) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot open for writing: " + path);
    write_plenoptic(out, cloud, naming);
}

void write_plenoptic_file(const std::string &path, const PlenopticMesh &mesh,
                          const ViewColorNaming &naming) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot open for writing: " + path);
    write_plenoptic(out, mesh, naming);
}

std::string to_bytes(const PlenopticPointCloud &cloud, const ViewColorNaming &naming) {
    return plenoptic_bytes(cloud, nullptr, naming);
}

}  // namespace pgs::ply
