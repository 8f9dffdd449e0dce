#ifndef HVACMPC_ERRORS_HPP
#define HVACMPC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace hvacmpc {

enum class ErrorKind {
    invalid_input,
    config,
    ingestion,
    io,
    training,
    solver,
    serialization,
};

/// Library-wide exception; `kind()` maps to the CLI exit-code contract.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
    case ErrorKind::invalid_input: return "invalid_input";
    case ErrorKind::config:        return "config";
    case ErrorKind::ingestion:     return "ingestion";
    case ErrorKind::io:            return "io";
    case ErrorKind::training:      return "training";
    case ErrorKind::solver:        return "solver";
    case ErrorKind::serialization: return "serialization";
    }
    return "unknown";
}

} // namespace hvacmpc

#endif
