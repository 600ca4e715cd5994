#include "scanqa/checkpoint.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace scanqa {

void save_checkpoint(const std::vector<ParamRef>& params, const std::string& stem) {
    std::ofstream bin(stem + ".bin", std::ios::binary);
    std::ofstream manifest(stem + ".manifest", std::ios::binary);
    if (!bin || !manifest) throw IoError("cannot write checkpoint " + stem);

    size_t offset = 0;
    for (const ParamRef& p : params) {
        manifest << p.name << " " << p.value->rows << " " << p.value->cols << " " << offset << "\n";
        std::vector<float> buf(p.value->a.size());
        for (size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(p.value->a[i]);
        bin.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(float)));
        offset += buf.size() * sizeof(float);
    }
    if (!bin || !manifest) throw IoError("write failed for checkpoint " + stem);
}

void load_checkpoint(const std::vector<ParamRef>& params, const std::string& stem) {
    std::ifstream manifest(stem + ".manifest", std::ios::binary);
    if (!manifest) throw IoError("cannot read " + stem + ".manifest");
    std::ifstream bin(stem + ".bin", std::ios::binary);
    if (!bin) throw IoError("cannot read " + stem + ".bin");

    struct Entry {
        int rows, cols;
        size_t offset;
    };
    std::map<std::string, Entry> entries;
    std::string line;
    while (std::getline(manifest, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string name;
        Entry e{};
        if (!(ls >> name >> e.rows >> e.cols >> e.offset))
            throw ParseError(stem + ".manifest: malformed line '" + line + "'");
        entries[name] = e;
    }
    if (entries.size() != params.size())
        throw ParseError(stem + ".manifest: tensor count mismatch (" + std::to_string(entries.size()) +
                         " vs " + std::to_string(params.size()) + " expected)");

    for (const ParamRef& p : params) {
        auto it = entries.find(p.name);
        if (it == entries.end()) throw ParseError(stem + ".manifest: missing tensor '" + p.name + "'");
        const Entry& e = it->second;
        if (e.rows != p.value->rows || e.cols != p.value->cols)
            throw ShapeError(stem + ": tensor '" + p.name + "' has shape " + std::to_string(e.rows) + "x" +
                             std::to_string(e.cols) + ", expected " + std::to_string(p.value->rows) + "x" +
                             std::to_string(p.value->cols));
        std::vector<float> buf(p.value->a.size());
        bin.seekg(static_cast<std::streamoff>(e.offset));
        bin.read(reinterpret_cast<char*>(buf.data()),
                 static_cast<std::streamsize>(buf.size() * sizeof(float)));
        if (!bin) throw IoError(stem + ".bin: short read for tensor '" + p.name + "'");
        for (size_t i = 0; i < buf.size(); ++i) p.value->a[i] = static_cast<double>(buf[i]);
    }
}

}  // namespace scanqa
