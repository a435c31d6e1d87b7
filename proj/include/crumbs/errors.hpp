#pragma once

#include <stdexcept>
#include <string>

namespace crumbs {

// Base class for all library failures.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or unreadable checkpoint container.
struct FormatError : Error {
    explicit FormatError(const std::string& msg) : Error(msg) {}
};

// Structural mismatch between checkpoints / task vectors / masks.
struct CompatError : Error {
    explicit CompatError(const std::string& msg) : Error(msg) {}
};

// Bad user-supplied configuration (hyperparameters, grids, flags).
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

} // namespace crumbs
