#include "sbmcov/error.hpp"

namespace sbmcov {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidInput: return "InvalidInput";
        case ErrorKind::InvalidModel: return "InvalidModel";
        case ErrorKind::NumericalFailure: return "NumericalFailure";
        case ErrorKind::DegenerateFit: return "DegenerateFit";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::ConfigError: return "ConfigError";
        case ErrorKind::EmptyGraph: return "EmptyGraph";
    }
    return "Unknown";
}

void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, std::string(to_string(kind)) + ": " + message);
}

}  // namespace sbmcov
