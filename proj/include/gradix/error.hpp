#pragma once

#include <stdexcept>
#include <string>

namespace gradix {

/// Caller violated an operation's contract (shape mismatch, wrong tape, bad
/// counts, unknown case name).
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Arithmetic domain violation such as division by zero.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Angular-derivative terms evaluated where |sin(theta)| is too small.
class SingularityError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A loss or residual evaluated to NaN or infinity.
class NonFiniteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A theorem assumption required by a bound evaluator does not hold.
class AssumptionError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Optimization stopped abnormally; carries a diagnostic message.
class TrainingAbort : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace gradix
