#pragma once

#include <stdexcept>
#include <string>

namespace shrink {

enum class ErrorKind {
    invalid_argument,  // parameter out of range, malformed input
    empty_input,       // no orbit data / empty point list
    not_invertible,    // inverse requested for a forward-only map
    unsupported,       // operation not defined for this map family
    horizon,           // table or convergent too short for the requested horizon
    infeasible,        // construction parameters cannot be satisfied
    certificate,       // certificate failed re-validation
    config,            // experiment configuration rejected
};

inline const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::invalid_argument: return "invalid argument";
    case ErrorKind::empty_input: return "empty input";
    case ErrorKind::not_invertible: return "not invertible";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::horizon: return "horizon";
    case ErrorKind::infeasible: return "infeasible";
    case ErrorKind::certificate: return "certificate";
    case ErrorKind::config: return "config";
    }
    return "unknown";
}

/// Library-wide exception. The kind drives CLI exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace shrink
