#include "geff/ply_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "geff/error.hpp"

namespace geff {

void write_ply(const std::string& path, const PlyData& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "ply\nformat binary_little_endian 1.0\n";
    out << "element vertex " << data.vertex_count << "\n";
    for (const auto& p : data.properties) out << "property float " << p << "\n";
    for (const auto& p : data.uchar_properties) out << "property uchar " << p << "\n";
    out << "end_header\n";
    const std::size_t nf = data.properties.size();
    const std::size_t nu = data.uchar_properties.size();
    for (std::size_t i = 0; i < data.vertex_count; ++i) {
        out.write(reinterpret_cast<const char*>(&data.floats[i * nf]),
                  static_cast<std::streamsize>(nf * sizeof(float)));
        if (nu)
            out.write(reinterpret_cast<const char*>(&data.uchars[i * nu]),
                      static_cast<std::streamsize>(nu));
    }
    if (!out) throw IoError("write failed: " + path);
}

PlyData read_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "ply") throw ParseError("not a PLY file: " + path);
    PlyData data;
    bool header_done = false;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string tok;
        ss >> tok;
        if (tok == "format") {
            std::string fmt;
            ss >> fmt;
            if (fmt != "binary_little_endian")
                throw ParseError("unsupported PLY format: " + fmt);
        } else if (tok == "element") {
            std::string name;
            ss >> name >> data.vertex_count;
            if (name != "vertex") throw ParseError("unsupported PLY element: " + name);
        } else if (tok == "property") {
            std::string type, name;
            ss >> type >> name;
            if (type == "float") {
                if (!data.uchar_properties.empty())
                    throw ParseError("float property after uchar properties");
                data.properties.push_back(name);
            } else if (type == "uchar") {
                data.uchar_properties.push_back(name);
            } else {
                throw ParseError("unsupported PLY property type: " + type);
            }
        } else if (tok == "end_header") {
            header_done = true;
            break;
        } else if (tok == "comment" || tok == "obj_info") {
            continue;
        } else {
            throw ParseError("unexpected PLY header line: " + line);
        }
    }
    if (!header_done) throw ParseError("PLY header truncated: " + path);
    const std::size_t nf = data.properties.size();
    const std::size_t nu = data.uchar_properties.size();
    data.floats.resize(data.vertex_count * nf);
    data.uchars.resize(data.vertex_count * nu);
    for (std::size_t i = 0; i < data.vertex_count; ++i) {
        in.read(reinterpret_cast<char*>(&data.floats[i * nf]),
                static_cast<std::streamsize>(nf * sizeof(float)));
        if (nu)
            in.read(reinterpret_cast<char*>(&data.uchars[i * nu]),
                    static_cast<std::streamsize>(nu));
    }
    if (!in) throw ParseError("PLY payload truncated: " + path);
    return data;
}

}  // namespace geff
