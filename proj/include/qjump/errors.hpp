#pragma once

#include <stdexcept>
#include <string>

namespace qjump {

// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class InvalidDimension : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

class DimensionMismatch : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

// A steady state was requested for an undamped driven oscillator.
class UndampedResonance : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

// A precondition of an operation was violated by its input (e.g. jumping from a dark state).
class ContractViolation : public Error {
public:
    using Error::Error;
};

// Integrator failure, trace drift, non-finite values.
class NumericalError : public Error {
public:
    using Error::Error;
};

// Population leaked into the top of the truncated Fock basis.
class LeakageError : public Error {
public:
    LeakageError(const std::string& what, double time, double leakage)
        : Error(what), time_(time), leakage_(leakage) {}

    double time() const noexcept { return time_; }
    double leakage() const noexcept { return leakage_; }

private:
    double time_;
    double leakage_;
};

}  // namespace qjump
