#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace diffbal {

enum class ErrorKind {
    InvalidParameter,
    InvalidInput,
    Parse,
    Validation,
    GenerationFailure,
    NotIrreducible,
    Unsupported,
    SizeLimit,
    NonConvergent,
    NonConverged,
    HypothesisViolation,
};

std::string_view to_string(ErrorKind kind);

// Every library failure is reported through this type; `kind()` lets callers
// (the CLI in particular) map failures to exit codes without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// Raised by local_p_divergence when the truncation cap is hit; carries the
// partial sum so callers can still report it.
class NonConvergedError : public Error {
public:
    NonConvergedError(const std::string& message, double partial_value, double residual)
        : Error(ErrorKind::NonConverged, message),
          partial_value_(partial_value),
          residual_(residual) {}

    double partial_value() const noexcept { return partial_value_; }
    double residual() const noexcept { return residual_; }

private:
    double partial_value_;
    double residual_;
};

}  // namespace diffbal
