#pragma once

#include <stdexcept>
#include <string>

namespace moodcast {

/// Broad failure classes. The CLI maps each one to a distinct exit code.
enum class ErrorKind { config, data, numerical };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

/// Malformed or invariant-violating input data.
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class ParseError : public DataError {
public:
    using DataError::DataError;
};

class AlignmentError : public DataError {
public:
    using DataError::DataError;
};

class DomainError : public DataError {
public:
    using DataError::DataError;
};

/// Too few observations for the requested computation.
class InsufficientDataError : public DataError {
public:
    using DataError::DataError;
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

class RankDeficiencyError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace moodcast
