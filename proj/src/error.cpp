#include "avm/error.hpp"

namespace avm {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::StepUnderflow: return "step-size underflow";
    case ErrorKind::NonFinite: return "non-finite value";
    case ErrorKind::SingularDivisor: return "singular divisor";
    case ErrorKind::DegenerateSpring: return "degenerate spring";
    case ErrorKind::QuadratureBudget: return "quadrature budget exhausted";
    case ErrorKind::NoSignChange: return "no sign change";
    case ErrorKind::MaxIterations: return "iteration limit";
    case ErrorKind::SingularJacobian: return "singular Jacobian";
    case ErrorKind::Divergence: return "divergence";
    }
    return "unknown";
}

} // namespace avm
