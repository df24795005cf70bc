#pragma once
#include <stdexcept>
#include <string>

namespace folddyn {

// Base class for all library errors so callers can catch one type.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (x >= x_max, r < 0, ...).
struct DomainError : Error {
    using Error::Error;
};

// Chart breakdown: polar angles undefined (r = 0 or v = 0).
// Thrown by coordinate conversions only; trajectory-level guards halt instead.
struct SingularChartError : DomainError {
    using DomainError::DomainError;
};

// Operation evaluated on (or too close to) the singular locus where it is undefined.
struct SingularLocusError : Error {
    using Error::Error;
};

// Kernel direction requested at the non-fold circle gamma.
struct UndefinedKernelError : Error {
    using Error::Error;
};

// Radial impact (characteristic constant a ~ 0): the jump construction degenerates.
struct DegenerateRadialError : Error {
    using Error::Error;
};

// Arrival/partner pair does not split into one in-point and one out-point.
struct NoDecisivePointError : Error {
    using Error::Error;
};

// Post-jump restart could not be projected back onto the (E, I) level.
struct BranchConstructionError : Error {
    using Error::Error;
};

// Poincare first-return residual exceeded the closure tolerance.
struct NonClosureError : Error {
    using Error::Error;
};

namespace num {

struct NoSignChangeError : Error {
    using Error::Error;
};

struct MaxStepsExceededError : Error {
    using Error::Error;
};

struct StepUnderflowError : Error {
    using Error::Error;
};

// Quadrature failed to reach the requested tolerance; carries the achieved error.
struct NonConvergenceError : Error {
    NonConvergenceError(const std::string& what, double achieved)
        : Error(what), achieved_error(achieved) {}
    double achieved_error;
};

} // namespace num
} // namespace folddyn
