#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace semgraph {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument or violated precondition.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Operand shapes do not agree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A forward computation produced NaN or Inf, or training diverged.
class NumericError : public Error {
public:
    using Error::Error;
};

/// A matrix that must be divided by its degrees has a zero-degree node.
class DegeneracyError : public Error {
public:
    DegeneracyError(const std::string& what, std::size_t node)
        : Error(what), node_(node) {}

    std::size_t node() const noexcept { return node_; }

private:
    std::size_t node_;
};

/// Malformed input file. `line()` is 1-based, 0 when not tied to a line.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t line)
        : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class EmptyCloudError : public FormatError {
public:
    explicit EmptyCloudError(const std::string& path)
        : FormatError("no points in " + path, 0) {}
};

/// Invalid combination of configuration values.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace semgraph
