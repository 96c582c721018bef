#pragma once

#include <stdexcept>
#include <string>

namespace checkout {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text or file, optionally tagged with a 1-based line number.
class FormatError : public Error {
public:
    explicit FormatError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

/// Bad configuration value or missing input, detected before any work runs.
class InputError : public Error {
public:
    using Error::Error;
};

/// Linear-algebra failure (singular innovation covariance etc.).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// A pipeline stage failed; carries the stage name.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& cause)
        : Error(stage + ": " + cause), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace checkout
