#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace carleman {

enum class ErrorKind {
    precondition,
    resolution,
    alignment,
    data,
    singularity,
    solver,
    assembly,
    routing,
    integration,
    degenerate_normal,
    neighborhood_too_thin,
    config,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::resolution: return "resolution";
    case ErrorKind::alignment: return "alignment";
    case ErrorKind::data: return "data";
    case ErrorKind::singularity: return "singularity";
    case ErrorKind::solver: return "solver";
    case ErrorKind::assembly: return "assembly";
    case ErrorKind::routing: return "routing";
    case ErrorKind::integration: return "integration";
    case ErrorKind::degenerate_normal: return "degenerate-normal-derivative";
    case ErrorKind::neighborhood_too_thin: return "neighborhood-too-thin";
    case ErrorKind::config: return "config";
    }
    return "unknown";
}

/// Single exception type for the library; the kind tells callers (and the
/// CLI exit-code mapping) which contract was violated.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline void require(bool cond, ErrorKind kind, const std::string& what) {
    if (!cond) throw Error(kind, what);
}

} // namespace carleman
