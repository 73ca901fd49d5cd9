#pragma once

#include <stdexcept>
#include <string>

namespace avm {

/// Failure categories raised by the numerical kernels and the models.
enum class ErrorKind {
    InvalidArgument,
    StepUnderflow,
    NonFinite,
    SingularDivisor,
    DegenerateSpring,
    QuadratureBudget,
    NoSignChange,
    MaxIterations,
    SingularJacobian,
    Divergence,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace avm
