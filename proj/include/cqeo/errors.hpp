#pragma once

#include <stdexcept>
#include <string>

namespace cqeo {

// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

class WrongRegime : public Error {
public:
    using Error::Error;
};

class ZeroDetuning : public InvalidParameter {
public:
    ZeroDetuning() : InvalidParameter("detuning must be nonzero (mu is undefined at delta = 0)") {}
};

class UnequalSidebands : public InvalidParameter {
public:
    using InvalidParameter::InvalidParameter;
};

class UnknownLabel : public Error {
public:
    explicit UnknownLabel(const std::string& label) : Error("unknown basis label '" + label + "'") {}
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class UnphysicalState : public Error {
public:
    using Error::Error;
};

// Raised when a diffusion matrix has a negative eigenvalue beyond roundoff.
class IndefiniteDiffusion : public Error {
public:
    IndefiniteDiffusion(const std::string& what, double eigenvalue) : Error(what), eigenvalue_(eigenvalue) {}
    double eigenvalue() const noexcept { return eigenvalue_; }

private:
    double eigenvalue_;
};

class StepInstability : public Error {
public:
    using Error::Error;
};

class EnsembleDivergence : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
};

}  // namespace cqeo
