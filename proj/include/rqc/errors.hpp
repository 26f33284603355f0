#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace rqc {

// Raised when a config violates a model invariant. Message names the offending key.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when an adaptive numerical procedure fails to reach its tolerance.
// Carries the best estimate so callers can log or inspect it.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& msg, std::complex<double> best, double bound)
        : std::runtime_error(msg), best_estimate(best), error_bound(bound) {}

    std::complex<double> best_estimate;
    double error_bound;
};

}  // namespace rqc
