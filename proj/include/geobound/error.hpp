#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace geobound {

enum class ErrorKind {
    NonFiniteMetric,
    StepTooSmall,
    SingularMetric,
    NonUnitDirection,
    NegativeTime,
    DegenerateFlat,
    NegativeKappa,
    BadWeights,
    CausticEncountered,
    SeriesTooShort,
    WindowTooShort,
    UnknownMetric,
    BadParams,
    UnknownQuantity,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries one of the ErrorKind tags so
/// callers (the CLI in particular) can map it onto an exit code.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Raised when the expansion-matrix integration hits a focal point.
class CausticError : public Error {
public:
    CausticError(double t, const std::string& what)
        : Error(ErrorKind::CausticEncountered, what), time_(t) {}

    double time() const noexcept { return time_; }

private:
    double time_;
};

}  // namespace geobound
