#pragma once

#include <stdexcept>
#include <string>

namespace snn {

/// Base class of every error thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dimension or layout mismatch between containers.
struct ShapeError : Error {
    using Error::Error;
};

/// Invalid argument, configuration value, or malformed content.
struct ValueError : Error {
    using Error::Error;
};

/// File access or file format problem.
struct IoError : Error {
    using Error::Error;
};

} // namespace snn
