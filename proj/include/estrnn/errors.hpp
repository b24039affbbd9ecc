#pragma once

#include <stdexcept>
#include <string>

namespace estrnn {

// Invalid or inconsistent configuration (bad key, bad value, violated
// cross-field rule). Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Missing or unreadable files / directories. Maps to CLI exit code 3.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor shape / arity violations detected at operation boundaries.
class ShapeError : public std::runtime_error {
public:
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric failures (divergence, non-finite values) during optimization.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace estrnn
