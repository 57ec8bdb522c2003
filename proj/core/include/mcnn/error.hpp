#pragma once

#include <stdexcept>
#include <string>

namespace mcnn {

// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Mismatched tensor/vector dimensions. Messages name the offending axis.
struct ShapeError : Error {
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// Model geometry that cannot be realized (branch shorter than filter,
// pooling factor larger than the map it pools, ...).
struct GeometryError : Error {
    explicit GeometryError(const std::string& msg) : Error(msg) {}
};

// File parsing / serialization problems. Messages carry path and line.
struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// Failures raised while fitting (non-finite loss, empty class, ...).
struct TrainError : Error {
    explicit TrainError(const std::string& msg) : Error(msg) {}
};

} // namespace mcnn
