#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace remkit {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition (bad config, bad ranges).
/// The CLI maps this family to exit code 2.
class ValidationError : public Error {
public:
    using Error::Error;
};

class RangeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ParseError : public ValidationError {
public:
    ParseError(std::size_t line, const std::string& what)
        : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class DegenerateLink : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

class FitDiverged : public Error {
public:
    using Error::Error;
};

class SingularSystem : public Error {
public:
    using Error::Error;
};

class NoNeighbors : public Error {
public:
    using Error::Error;
};

class DuplicateLocations : public SingularSystem {
public:
    DuplicateLocations(std::size_t first, std::size_t second)
        : SingularSystem("duplicate training locations at indices " + std::to_string(first) +
                         " and " + std::to_string(second) + " with zero nugget"),
          first_(first), second_(second) {}

    std::size_t first() const noexcept { return first_; }
    std::size_t second() const noexcept { return second_; }

private:
    std::size_t first_;
    std::size_t second_;
};

class DegenerateExtent : public Error {
public:
    using Error::Error;
};

class TooManyPoints : public Error {
public:
    using Error::Error;
};

class NoSupportedBins : public Error {
public:
    using Error::Error;
};

} // namespace remkit
