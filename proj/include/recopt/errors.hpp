#pragma once

#include <stdexcept>
#include <string>

namespace recopt {

// Raised when a configuration file cannot be read or violates an invariant.
// The message always names the offending field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A documented precondition of an operation does not hold.
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// The optimisation backend could not produce an optimal solution where one
// was required (infeasible/unbounded models built by this library, iteration
// limits, numerical trouble).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace recopt
