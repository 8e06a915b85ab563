#pragma once

#include <stdexcept>
#include <string>

namespace coadopt {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: wrong dimensions, out-of-range values, unparsable files.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A configuration that does not satisfy the model's standing assumptions.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// An iterative method stopped before meeting its tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double best_estimate, double residual)
        : Error(what), best_estimate_(best_estimate), residual_(residual) {}

    double best_estimate() const noexcept { return best_estimate_; }
    double residual() const noexcept { return residual_; }

private:
    double best_estimate_;
    double residual_;
};

/// A numerical state the model's invariants rule out (NaN, large negative
/// fractions, vanishing opinions in a denominator).
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace coadopt
