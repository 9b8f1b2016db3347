#pragma once

#include <stdexcept>
#include <string>

namespace kslab {

/// Quadrature or linear-algebra failure with diagnostic context.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// A requested construction violates a feasibility inequality; the message
/// names the violated inequality.
class InfeasibleError : public std::invalid_argument {
public:
    explicit InfeasibleError(const std::string& inequality)
        : std::invalid_argument("infeasible: " + inequality) {}
};

/// Grid too coarse for the requested computation.
class ResolutionError : public std::invalid_argument {
public:
    explicit ResolutionError(const std::string& what) : std::invalid_argument(what) {}
};

/// The time stepper produced a state violating a scheme guarantee
/// (negativity beyond roundoff slack); the run aborts.
class SchemeViolationError : public std::runtime_error {
public:
    explicit SchemeViolationError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace kslab
