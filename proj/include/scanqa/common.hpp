#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace scanqa {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input files (PLY headers, JSONL, manifests).
struct ParseError : Error {
    using Error::Error;
};

// Data violates a documented invariant (NaN coordinates, empty scene, ...).
struct ValidationError : Error {
    using Error::Error;
};

// Out-of-range arguments to a kernel or builder.
struct ParameterError : Error {
    using Error::Error;
};

// Inconsistent run configuration (missing annotations, empty vocabulary, ...).
struct ConfigError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// Tensor dimensions do not match the model configuration.
struct ShapeError : Error {
    using Error::Error;
};

struct TrainError : Error {
    using Error::Error;
};

enum class LogLevel { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

// Level comes from SCANQA_LOG (debug|info|warn|error|off) unless set explicitly.
void set_log_level(LogLevel level);
LogLevel log_level();
void log_message(LogLevel level, const std::string& msg);

inline void log_debug(const std::string& msg) { log_message(LogLevel::debug, msg); }
inline void log_info(const std::string& msg) { log_message(LogLevel::info, msg); }
inline void log_warn(const std::string& msg) { log_message(LogLevel::warn, msg); }
inline void log_error(const std::string& msg) { log_message(LogLevel::error, msg); }

// splitmix64; used to derive independent stream seeds from one run seed.
uint64_t mix_seed(uint64_t seed, uint64_t stream);

}  // namespace scanqa
