#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace reckon {

/// Base class for every error raised by the library. The CLI maps these to
/// exit code 2 (data error).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file. `line()` is 1-based, 0 when not applicable.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class EmptyInputError : public Error {
public:
    using Error::Error;
};

class DuplicateIdError : public Error {
public:
    explicit DuplicateIdError(const std::string& id) : Error("duplicate record id '" + id + "'"), id_(id) {}

    const std::string& id() const noexcept { return id_; }

private:
    std::string id_;
};

/// A mathematical quantity is undefined for the given arguments
/// (e.g. confidence with a zero-probability antecedent).
class UndefinedError : public Error {
public:
    using Error::Error;
};

/// Arguments violate a documented precondition.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// NaN or infinity encountered where finite values are required.
class NonFiniteError : public Error {
public:
    using Error::Error;
};

}  // namespace reckon
