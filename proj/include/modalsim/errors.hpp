// errors.hpp — exception hierarchy shared by all modalsim modules.
//
// Precondition violations derive from std::invalid_argument. Failures that are
// a property of the numerics (an infeasible Markov step, an indefinite Gram
// matrix) derive from NumericalError so the CLI can map them to exit code 3.

#pragma once

#include <stdexcept>
#include <string>

namespace modalsim {

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Gram matrix of a pointer family is not positive semidefinite.
class GramIndefinite : public NumericalError {
public:
    GramIndefinite(const std::string& what, double min_eigenvalue)
        : NumericalError(what), min_eigenvalue_(min_eigenvalue) {}
    double min_eigenvalue() const noexcept { return min_eigenvalue_; }

private:
    double min_eigenvalue_;
};

// A discrete step produced a negative diagonal kernel entry p_ii.
class InfeasibleStep : public NumericalError {
public:
    InfeasibleStep(const std::string& what, int branch, double diagonal)
        : NumericalError(what), branch_(branch), diagonal_(diagonal) {}
    int branch() const noexcept { return branch_; }
    double diagonal() const noexcept { return diagonal_; }

private:
    int branch_;
    double diagonal_;
};

// Schmidt spectrum is (nearly) degenerate where a smooth derivative is needed.
class DegenerateSpectrum : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace modalsim
