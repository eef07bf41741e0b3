#pragma once

#include <stdexcept>
#include <string>

namespace negsim {

/// Category carried by every engine exception; the C API maps these onto
/// its numeric status codes.
enum class ErrorKind {
    Parse,
    Validation,
    Config,
    Io,
    EmptyInput,
    BackendUnavailable,
    Auth,
    ScriptExhausted,
    Extraction,
    Schema,
    CacheMiss,
    Domain,
    Internal,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Malformed document. `location` is "line:col" for syntax errors or a field
/// path such as "topics[1].options" for shape errors.
class ParseError : public Error {
public:
    ParseError(std::string location, const std::string& message)
        : Error(ErrorKind::Parse, location + ": " + message), location_(std::move(location)) {}
    const std::string& location() const noexcept { return location_; }

private:
    std::string location_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

/// Raised for precondition violations of pure computations (empty series,
/// degenerate regression windows, mismatched lengths...).
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(ErrorKind::Domain, what) {}
};

class EmptyInputError : public Error {
public:
    explicit EmptyInputError(const std::string& what) : Error(ErrorKind::EmptyInput, what) {}
};

}  // namespace negsim
