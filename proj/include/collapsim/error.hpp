#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace collapsim {

enum class ErrorKind {
    Configuration,
    DegenerateInput,
    Resource,
    KernelIntegrity,
    StepSize,
    NumericalOverflow,
    DegenerateHit,
    DegenerateDynamics,
    UnsupportedModel,
    InconclusiveCollapse,
    FitQuality,
    Data,
};

std::string_view to_string(ErrorKind kind);

/// Base exception for every failure raised by the library. The kind lets
/// callers (the CLI in particular) map failures onto exit codes without
/// parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

inline void require(bool condition, ErrorKind kind, const std::string& what) {
    if (!condition) fail(kind, what);
}

}  // namespace collapsim
