#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hsa {

// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input outside an admissible interval (servo range, grid step, ...).
class RangeError : public Error {
public:
    using Error::Error;
};

// A fitted or supplied model produced a physically meaningless result.
class ModelError : public Error {
public:
    using Error::Error;
};

class IllPosedError : public Error {
public:
    using Error::Error;
};

// Lengths or arc parameters outside the constant-curvature envelope.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class UnsupportedDatasetError : public Error {
public:
    using Error::Error;
};

class EmptyDatasetError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& source, std::size_t line, std::size_t column,
               const std::string& what)
        : Error(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
          line_(line),
          column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

}  // namespace hsa
