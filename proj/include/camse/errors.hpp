#pragma once

#include <stdexcept>
#include <string>

namespace camse {

// Error taxonomy maps onto CLI exit codes: ConfigError -> 1,
// IoError/ParseError -> 2, DivergenceError and the rest -> 3.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

struct StateError : std::runtime_error {
    explicit StateError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DivergenceError : std::runtime_error {
    DivergenceError(const std::string& msg, int epoch, int batch)
        : std::runtime_error(msg), epoch(epoch), batch(batch) {}
    int epoch;
    int batch;
};

}  // namespace camse
