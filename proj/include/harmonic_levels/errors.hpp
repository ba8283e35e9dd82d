#pragma once

#include <stdexcept>
#include <string>

namespace harmonic_levels {

/// Base of every error thrown by the library. The category decides the CLI
/// exit code: configuration problems map to 2, numerical failures to 4.
class Error : public std::runtime_error {
public:
    enum class Category { config, numerical };

    Error(Category category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    Category category() const noexcept { return category_; }

private:
    Category category_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(Category::config, what) {}
};

/// Malformed expression text. `offset` is the 0-based character position.
class ParseError : public ConfigError {
public:
    ParseError(const std::string& what, std::size_t offset)
        : ConfigError(what + " at offset " + std::to_string(offset)), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(Category::numerical, what) {}
};

/// log/sqrt of a negative, division by zero, and similar. Carries the
/// printed form of the offending subexpression.
class DomainError : public NumericalError {
public:
    DomainError(const std::string& what, std::string subexpression)
        : NumericalError(what + " in '" + subexpression + "'"),
          subexpression_(std::move(subexpression)) {}

    const std::string& subexpression() const noexcept { return subexpression_; }

private:
    std::string subexpression_;
};

class UnboundVariableError : public NumericalError {
public:
    explicit UnboundVariableError(const std::string& name)
        : NumericalError("unbound variable '" + name + "'") {}
};

class ConvergenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class OutOfDomainError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class OrientationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DegenerateError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class RejectedFamilyError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

} // namespace harmonic_levels
