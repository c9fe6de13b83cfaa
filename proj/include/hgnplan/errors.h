#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hgnplan {

// Malformed PDDL text. Line and column are 1-based.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, std::size_t column, const std::string &msg)
        : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
          line_(line),
          column_(column) {}
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

class UnsupportedRequirementError : public std::runtime_error {
public:
    explicit UnsupportedRequirementError(const std::string &requirement)
        : std::runtime_error("unsupported PDDL requirement or construct: " + requirement),
          requirement_(requirement) {}
    const std::string &requirement() const { return requirement_; }

private:
    std::string requirement_;
};

// Well-formed PDDL that does not resolve (unknown predicate/object/type, domain mismatch).
class SemanticError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ResourceLimitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PreconditionViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Hypergraph feature widths, structures or arity bounds do not line up.
class ShapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ArityOverflowError : public ShapeError {
public:
    using ShapeError::ShapeError;
};

// Model file that cannot be decoded (truncated, malformed, missing fields).
class ModelFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ModelVersionError : public ModelFormatError {
public:
    using ModelFormatError::ModelFormatError;
};

}  // namespace hgnplan
