#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fabula {

enum class ErrorCode {
    invalid_argument,
    invalid_state,
    not_found,
    conflict,
    parse_error,
    unsupported_version,
    backend_unavailable,
    backend_error,
    empty_generation,
    partial_result,
    undefined_result,
    aborted_run,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Base of every error the library throws. The code drives HTTP status and CLI
/// exit-code mapping in the service layer.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& message)
        : Error(ErrorCode::invalid_argument, message) {}
};

class InvalidState : public Error {
public:
    explicit InvalidState(const std::string& message)
        : Error(ErrorCode::invalid_state, message) {}
};

class NotFound : public Error {
public:
    explicit NotFound(const std::string& message) : Error(ErrorCode::not_found, message) {}
};

/// Text that does not follow an expected grammar. `line` is 1-based when the
/// input is line oriented; `offset` is a byte offset when it is not.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t line, std::size_t offset = 0)
        : Error(ErrorCode::parse_error, message), line_(line), offset_(offset) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }
    [[nodiscard]] std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t line_;
    std::size_t offset_;
};

class UnsupportedVersion : public Error {
public:
    UnsupportedVersion(const std::string& message, int version)
        : Error(ErrorCode::unsupported_version, message), version_(version) {}

    [[nodiscard]] int version() const noexcept { return version_; }

private:
    int version_;
};

class BackendUnavailable : public Error {
public:
    explicit BackendUnavailable(const std::string& message)
        : Error(ErrorCode::backend_unavailable, message) {}
};

class BackendError : public Error {
public:
    BackendError(const std::string& message, int status)
        : Error(ErrorCode::backend_error, message), status_(status) {}

    /// HTTP status of the failing response, 0 when the body was malformed.
    [[nodiscard]] int status() const noexcept { return status_; }

private:
    int status_;
};

class EmptyGeneration : public Error {
public:
    explicit EmptyGeneration(const std::string& message)
        : Error(ErrorCode::empty_generation, message) {}
};

}  // namespace fabula
