#pragma once

#include <stdexcept>
#include <string>

namespace mlbpgd {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Evaluation requested outside the domain of a reference function,
// divergence, or objective (nonpositive log argument, non-SPD matrix, ...).
struct DomainError : Error { using Error::Error; };

// Step size outside its admissible interval.
struct StepError : Error { using Error::Error; };

// A scalar root-finder failed to bracket or converge.
struct RootError : Error { using Error::Error; };

// Vector / matrix dimensions do not line up, or a grid side is invalid.
struct ShapeError : Error { using Error::Error; };

// Inconsistent constructor arguments (bad bounds, mismatched pairing, ...).
struct ArgError : Error { using Error::Error; };

// A factorization produced a non-finite result.
struct SingularError : Error { using Error::Error; };

// The operation is well-posed but deliberately not provided.
struct UnsupportedError : Error { using Error::Error; };

// A direction handed to the line search is not a descent direction.
struct DescentError : Error { using Error::Error; };

// Backtracking exhausted its iteration budget.
struct LineSearchError : Error { using Error::Error; };

// A constructed feasible region has empty relative interior.
struct InfeasibleError : Error { using Error::Error; };

// A design matrix fails the rank condition needed for a positive definite
// information matrix.
struct RankError : Error { using Error::Error; };

// Malformed external input (image file, config file, CSV).
struct FormatError : Error { using Error::Error; };

// Invalid or contradictory experiment configuration.
struct ConfigError : Error { using Error::Error; };

} // namespace mlbpgd
