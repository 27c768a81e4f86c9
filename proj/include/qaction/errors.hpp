#pragma once

#include <stdexcept>
#include <string>

namespace qaction {

// Base of every failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid parameters, presets, weights or config files.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Field length does not match the grid it is used with.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Density or amplitude dropped below the node threshold where the
// dynamics divides by it.
class NodeError : public Error {
public:
    using Error::Error;
};

// Singular solve, eigensolver failure, non-convergence or blow-up.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace qaction
