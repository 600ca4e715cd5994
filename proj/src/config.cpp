#include "scanqa/config.hpp"

#include <fstream>
#include <sstream>

namespace scanqa {

namespace {

std::string trim(const std::string& s) {
    size_t lo = s.find_first_not_of(" \t\r\n");
    if (lo == std::string::npos) return "";
    size_t hi = s.find_last_not_of(" \t\r\n");
    return s.substr(lo, hi - lo + 1);
}

}  // namespace

KvConfig KvConfig::parse_text(const std::string& text) {
    KvConfig config;
    std::istringstream in(text);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError("config line " + std::to_string(line_no) + ": empty key");
        config.values[key] = value;
    }
    return config;
}

KvConfig KvConfig::parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_text(buf.str());
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

std::string KvConfig::get(const std::string& key, const std::string& fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
}

long KvConfig::get_long(const std::string& key, long fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    try {
        return std::stol(it->second);
    } catch (const std::exception&) {
        throw ParseError("config key '" + key + "': not an integer: '" + it->second + "'");
    }
}

double KvConfig::get_double(const std::string& key, double fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw ParseError("config key '" + key + "': not a number: '" + it->second + "'");
    }
}

}  // namespace scanqa
