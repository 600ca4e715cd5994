#include "scanqa/common.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <mutex>

namespace scanqa {

namespace {

LogLevel parse_level(const char* s) {
    if (s == nullptr) return LogLevel::warn;
    if (std::strcmp(s, "debug") == 0) return LogLevel::debug;
    if (std::strcmp(s, "info") == 0) return LogLevel::info;
    if (std::strcmp(s, "warn") == 0) return LogLevel::warn;
    if (std::strcmp(s, "error") == 0) return LogLevel::error;
    if (std::strcmp(s, "off") == 0) return LogLevel::off;
    return LogLevel::warn;
}

LogLevel g_level = parse_level(std::getenv("SCANQA_LOG"));
std::mutex g_log_mutex;

const char* level_tag(LogLevel level) {
    switch (level) {
        case LogLevel::debug: return "debug";
        case LogLevel::info: return "info";
        case LogLevel::warn: return "warn";
        case LogLevel::error: return "error";
        default: return "?";
    }
}

}  // namespace

void set_log_level(LogLevel level) { g_level = level; }

LogLevel log_level() { return g_level; }

void log_message(LogLevel level, const std::string& msg) {
    if (level < g_level) return;
    std::lock_guard<std::mutex> lock(g_log_mutex);
    std::fprintf(stderr, "[scanqa:%s] %s\n", level_tag(level), msg.c_str());
}

uint64_t mix_seed(uint64_t seed, uint64_t stream) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace scanqa
