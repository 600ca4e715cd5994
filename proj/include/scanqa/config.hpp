#pragma once

#include <map>
#include <optional>
#include <string>

#include "scanqa/common.hpp"

namespace scanqa {

// key = value text config; '#' starts a comment. CLI flags override.
struct KvConfig {
    std::map<std::string, std::string> values;

    static KvConfig parse_file(const std::string& path);
    static KvConfig parse_text(const std::string& text);

    bool has(const std::string& key) const { return values.count(key) > 0; }
    std::string get(const std::string& key, const std::string& fallback) const;
    long get_long(const std::string& key, long fallback) const;
    double get_double(const std::string& key, double fallback) const;
};

}  // namespace scanqa
