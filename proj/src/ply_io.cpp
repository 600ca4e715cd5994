#include "scanqa/ply_io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace scanqa {

namespace {

enum class PlyType { i8, u8, i16, u16, i32, u32, f32, f64 };

struct PlyProperty {
    std::string name;
    PlyType type = PlyType::f32;
    bool is_list = false;
};

struct PlyElement {
    std::string name;
    size_t count = 0;
    std::vector<PlyProperty> properties;
};

size_t type_size(PlyType t) {
    switch (t) {
        case PlyType::i8:
        case PlyType::u8: return 1;
        case PlyType::i16:
        case PlyType::u16: return 2;
        case PlyType::i32:
        case PlyType::u32:
        case PlyType::f32: return 4;
        case PlyType::f64: return 8;
    }
    return 0;
}

bool parse_type(const std::string& word, PlyType& out) {
    if (word == "char" || word == "int8") out = PlyType::i8;
    else if (word == "uchar" || word == "uint8") out = PlyType::u8;
    else if (word == "short" || word == "int16") out = PlyType::i16;
    else if (word == "ushort" || word == "uint16") out = PlyType::u16;
    else if (word == "int" || word == "int32") out = PlyType::i32;
    else if (word == "uint" || word == "uint32") out = PlyType::u32;
    else if (word == "float" || word == "float32") out = PlyType::f32;
    else if (word == "double" || word == "float64") out = PlyType::f64;
    else return false;
    return true;
}

std::string rstrip_cr(std::string line) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    return line;
}

double read_binary_scalar(std::istream& in, PlyType t) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(type_size(t)));
    switch (t) {
        case PlyType::i8: return static_cast<double>(static_cast<int8_t>(buf[0]));
        case PlyType::u8: return static_cast<double>(buf[0]);
        case PlyType::i16: {
            int16_t v;
            std::memcpy(&v, buf, 2);
            return v;
        }
        case PlyType::u16: {
            uint16_t v;
            std::memcpy(&v, buf, 2);
            return v;
        }
        case PlyType::i32: {
            int32_t v;
            std::memcpy(&v, buf, 4);
            return v;
        }
        case PlyType::u32: {
            uint32_t v;
            std::memcpy(&v, buf, 4);
            return v;
        }
        case PlyType::f32: {
            float v;
            std::memcpy(&v, buf, 4);
            return v;
        }
        case PlyType::f64: {
            double v;
            std::memcpy(&v, buf, 8);
            return v;
        }
    }
    return 0.0;
}

std::string stem_of(const std::string& path) {
    size_t slash = path.find_last_of("/\\");
    std::string base = (slash == std::string::npos) ? path : path.substr(slash + 1);
    size_t dot = base.rfind('.');
    if (dot != std::string::npos) base = base.substr(0, dot);
    return base;
}

}  // namespace

Scene load_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);

    std::string line;
    if (!std::getline(in, line) || rstrip_cr(line) != "ply")
        throw ParseError(path + ": not a PLY file (missing 'ply' magic)");

    bool binary = false;
    bool format_seen = false;
    std::vector<PlyElement> elements;
    while (true) {
        if (!std::getline(in, line)) throw ParseError(path + ": header ends before end_header");
        line = rstrip_cr(line);
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "comment" || word == "obj_info" || word.empty()) continue;
        if (word == "format") {
            std::string fmt, ver;
            ls >> fmt >> ver;
            if (ver != "1.0") throw ParseError(path + ": unsupported version in header line '" + line + "'");
            if (fmt == "ascii") binary = false;
            else if (fmt == "binary_little_endian") binary = true;
            else throw ParseError(path + ": unsupported format in header line '" + line + "'");
            format_seen = true;
        } else if (word == "element") {
            PlyElement el;
            long long count = -1;
            if (!(ls >> el.name >> count) || count < 0)
                throw ParseError(path + ": malformed header line '" + line + "'");
            el.count = static_cast<size_t>(count);
            elements.push_back(std::move(el));
        } else if (word == "property") {
            if (elements.empty()) throw ParseError(path + ": property before element in line '" + line + "'");
            PlyProperty prop;
            std::string tword;
            ls >> tword;
            if (tword == "list") {
                std::string ctype, itype;
                if (!(ls >> ctype >> itype >> prop.name))
                    throw ParseError(path + ": malformed header line '" + line + "'");
                prop.is_list = true;
            } else {
                if (!parse_type(tword, prop.type) || !(ls >> prop.name))
                    throw ParseError(path + ": malformed header line '" + line + "'");
            }
            elements.back().properties.push_back(std::move(prop));
        } else if (word == "end_header") {
            break;
        } else {
            throw ParseError(path + ": unrecognized header line '" + line + "'");
        }
    }
    if (!format_seen) throw ParseError(path + ": header missing format line");

    size_t vertex_index = elements.size();
    for (size_t i = 0; i < elements.size(); ++i) {
        if (elements[i].name == "vertex") {
            vertex_index = i;
            break;
        }
    }
    if (vertex_index == elements.size()) throw ParseError(path + ": no vertex element in header");

    // Skip any elements that precede the vertex element.
    for (size_t i = 0; i < vertex_index; ++i) {
        const PlyElement& el = elements[i];
        if (binary) {
            size_t stride = 0;
            for (const auto& p : el.properties) {
                if (p.is_list)
                    throw ParseError(path + ": list property in element '" + el.name +
                                     "' before vertex is unsupported");
                stride += type_size(p.type);
            }
            in.seekg(static_cast<std::streamoff>(stride * el.count), std::ios::cur);
        } else {
            for (size_t r = 0; r < el.count; ++r) {
                if (!std::getline(in, line)) throw ParseError(path + ": unexpected EOF in element '" + el.name + "'");
            }
        }
    }

    const PlyElement& vertex = elements[vertex_index];
    if (vertex.count == 0) throw ValidationError(path + ": element vertex 0 (N >= 1 violated)");

    int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
    for (size_t p = 0; p < vertex.properties.size(); ++p) {
        const PlyProperty& prop = vertex.properties[p];
        if (prop.is_list) throw ParseError(path + ": list property '" + prop.name + "' on vertex is unsupported");
        const int pi = static_cast<int>(p);
        if (prop.name == "x") ix = pi;
        else if (prop.name == "y") iy = pi;
        else if (prop.name == "z") iz = pi;
        else if (prop.name == "red") ir = pi;
        else if (prop.name == "green") ig = pi;
        else if (prop.name == "blue") ib = pi;
    }
    if (ix < 0 || iy < 0 || iz < 0) throw ParseError(path + ": vertex element lacks x/y/z properties");
    for (int ci : {ix, iy, iz}) {
        const PlyType t = vertex.properties[static_cast<size_t>(ci)].type;
        if (t != PlyType::f32 && t != PlyType::f64)
            throw ParseError(path + ": coordinate property must be float32 or float64");
    }
    const bool has_colors = ir >= 0 && ig >= 0 && ib >= 0;
    if (has_colors) {
        for (int ci : {ir, ig, ib}) {
            if (vertex.properties[static_cast<size_t>(ci)].type != PlyType::u8)
                throw ParseError(path + ": color property must be uchar");
        }
    }

    std::vector<Point> points(vertex.count);
    std::vector<double> values(vertex.properties.size());
    for (size_t v = 0; v < vertex.count; ++v) {
        if (binary) {
            for (size_t p = 0; p < vertex.properties.size(); ++p)
                values[p] = read_binary_scalar(in, vertex.properties[p].type);
            if (!in) throw ParseError(path + ": unexpected EOF in vertex data at point " + std::to_string(v));
        } else {
            if (!std::getline(in, line))
                throw ParseError(path + ": unexpected EOF in vertex data at point " + std::to_string(v));
            std::istringstream ls(rstrip_cr(line));
            std::string token;
            for (size_t p = 0; p < vertex.properties.size(); ++p) {
                if (!(ls >> token))
                    throw ParseError(path + ": malformed vertex line at point " + std::to_string(v));
                try {
                    values[p] = std::stod(token);  // accepts nan/inf, caught by validation below
                } catch (const std::exception&) {
                    throw ParseError(path + ": malformed vertex line at point " + std::to_string(v));
                }
            }
        }
        Point& pt = points[v];
        pt.x = values[static_cast<size_t>(ix)];
        pt.y = values[static_cast<size_t>(iy)];
        pt.z = values[static_cast<size_t>(iz)];
        if (!std::isfinite(pt.x) || !std::isfinite(pt.y) || !std::isfinite(pt.z))
            throw ValidationError(path + ": non-finite coordinate at point " + std::to_string(v));
        if (has_colors) {
            pt.r = values[static_cast<size_t>(ir)];
            pt.g = values[static_cast<size_t>(ig)];
            pt.b = values[static_cast<size_t>(ib)];
        }
    }

    Scene scene;
    scene.scene_id = stem_of(path);
    scene.points = std::move(points);
    scene.extents = compute_extents(scene.points);
    scene.missing_colors = !has_colors;
    if (scene.missing_colors)
        log_warn(path + ": no color properties, defaulting colors to 0");
    return scene;
}

void export_ply(const Scene& scene, const std::string& path) {
    validate_scene(scene);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);

    out << "ply\n"
        << "format binary_little_endian 1.0\n"
        << "comment scene_id " << scene.scene_id << "\n";
    if (scene.colors_normalized)
        out << "comment colors quantized from normalized [0,1] by round(255*c)\n";
    out << "element vertex " << scene.points.size() << "\n"
        << "property double x\n"
        << "property double y\n"
        << "property double z\n"
        << "property uchar red\n"
        << "property uchar green\n"
        << "property uchar blue\n"
        << "end_header\n";

    for (const Point& p : scene.points) {
        const double xyz[3] = {p.x, p.y, p.z};
        out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
        unsigned char rgb[3];
        if (scene.colors_normalized) {
            rgb[0] = static_cast<unsigned char>(std::lround(255.0 * p.r));
            rgb[1] = static_cast<unsigned char>(std::lround(255.0 * p.g));
            rgb[2] = static_cast<unsigned char>(std::lround(255.0 * p.b));
        } else {
            rgb[0] = static_cast<unsigned char>(p.r);
            rgb[1] = static_cast<unsigned char>(p.g);
            rgb[2] = static_cast<unsigned char>(p.b);
        }
        out.write(reinterpret_cast<const char*>(rgb), sizeof(rgb));
    }
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace scanqa
