#pragma once

#include <stdexcept>
#include <string>

namespace sbmcov {

enum class ErrorKind {
    InvalidInput,
    InvalidModel,
    NumericalFailure,
    DegenerateFit,
    ParseError,
    ConfigError,
    EmptyGraph
};

const char* to_string(ErrorKind kind);

/// Library error carrying a machine-readable kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace sbmcov
