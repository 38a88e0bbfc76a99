#pragma once

#include <stdexcept>
#include <string>

namespace lyapsim {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// An integral or moment that is infinite by the closed-form tail law.
class DivergenceError : public Error {
public:
    using Error::Error;
};

/// Adaptive quadrature missed its tolerance; carries the partial estimate.
class QuadratureError : public Error {
public:
    QuadratureError(const std::string& what, double estimate, double error_bound)
        : Error(what), estimate_(estimate), error_bound_(error_bound) {}
    double estimate() const { return estimate_; }
    double error_bound() const { return error_bound_; }

private:
    double estimate_;
    double error_bound_;
};

/// Non-finite drift, diffusion or kernel evaluation at a sample point.
class SamplingError : public Error {
public:
    using Error::Error;
};

/// Malformed configuration; `line` is 1-based, 0 when not tied to a line.
class ConfigError : public Error {
public:
    ConfigError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

/// A certificate (dissipativity, kernel bounds, Lyapunov condition) failed.
class CertificationError : public Error {
public:
    using Error::Error;
};

/// Monte Carlo estimate impossible (e.g. every path exploded).
class EstimationError : public Error {
public:
    using Error::Error;
};

}  // namespace lyapsim
