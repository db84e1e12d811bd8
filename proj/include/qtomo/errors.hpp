#pragma once

#include <stdexcept>
#include <string>

namespace qtomo {

/// Input violates an operation's precondition (bad angle, p outside [0,1], non-finite entry ...).
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An iterative routine did not converge within its budget.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Cholesky parameters that are all zero, so no density matrix is defined.
class DegenerateParameters : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace qtomo
