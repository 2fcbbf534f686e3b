#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace bpool {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Series lengths or grid shapes that do not line up.
class ShapeError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& file, std::size_t line, const std::string& what)
        : Error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

/// A home is missing one or more minutes of the grid.
class CompletenessError : public ValidationError {
public:
    CompletenessError(std::string home_id, const std::string& what)
        : ValidationError("home " + home_id + ": " + what), home_id_(std::move(home_id)) {}
    const std::string& home_id() const noexcept { return home_id_; }

private:
    std::string home_id_;
};

/// Price series does not cover every interval of the grid.
class CoverageError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Solver gave up (iteration cap, singular basis it could not repair).
class ResourceError : public Error {
public:
    using Error::Error;
};

class DecodeError : public Error {
public:
    using Error::Error;
};

}  // namespace bpool
