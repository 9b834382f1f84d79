#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace llmclust {

// Error categories drive CLI exit codes: config -> 2, data -> 3, backend -> 4.
enum class ErrorKind {
    config,
    data,
    backend,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(std::string message)
        : Error(ErrorKind::config, std::move(message)) {}
};

// Dataset / run-artifact problems. Carries a 1-based line number when the
// failure is tied to a specific record in a file.
class DataError : public Error {
public:
    explicit DataError(std::string message, std::optional<std::size_t> line = std::nullopt)
        : Error(ErrorKind::data, std::move(message)), line_(line) {}

    std::optional<std::size_t> line() const { return line_; }

private:
    std::optional<std::size_t> line_;
};

enum class BackendFailure {
    unavailable,       // retries exhausted on transient failures
    auth,              // non-retryable credential problem
    context_too_long,  // non-retryable, prompt exceeds model context
    protocol,          // unexpected response shape / non-retryable status
};

class BackendError : public Error {
public:
    BackendError(BackendFailure failure, std::string message)
        : Error(ErrorKind::backend, std::move(message)), failure_(failure) {}

    BackendFailure failure() const { return failure_; }

private:
    BackendFailure failure_;
};

// A model response that could not be parsed into the expected JSON payload.
// Recoverable: callers re-ask once or fall back, they do not abort the run.
class ResponseFormatError : public Error {
public:
    enum class Cause { no_json_found, key_missing, wrong_shape };

    ResponseFormatError(Cause cause, std::string message)
        : Error(ErrorKind::data, std::move(message)), cause_(cause) {}

    Cause cause() const { return cause_; }

private:
    Cause cause_;
};

class CacheError : public Error {
public:
    explicit CacheError(std::string message)
        : Error(ErrorKind::data, std::move(message)) {}
};

}  // namespace llmclust
