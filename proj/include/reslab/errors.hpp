#pragma once

#include <stdexcept>
#include <string>

namespace reslab {

// Base class for every error thrown by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or inconsistent input data (files, candidate structures).
struct ParseError : Error {
    using Error::Error;
};

// A numeric decision could not be made robustly (sheet attribution,
// root refinement, quadrature convergence and the like).
struct AmbiguityError : Error {
    using Error::Error;
};

// Input violates a structural requirement of the operator class
// (coefficient positivity, support shape, degree laws).
struct ClassViolationError : Error {
    using Error::Error;
};

// Inverse-problem admissibility gate failed (exceptional-set collisions,
// solvability conditions, failed candidate validation).
struct GateError : Error {
    using Error::Error;
};

} // namespace reslab
