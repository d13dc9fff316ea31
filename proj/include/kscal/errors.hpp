#pragma once

#include <stdexcept>
#include <string>

namespace kscal {

/// Base class for all kscal errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid argument value (nonpositive rate, log of a negative number, ...).
struct DomainError : Error {
    using Error::Error;
};

/// Inconsistent or unusable configuration (n < 2, unresolved bandwidth, bad JSON, ...).
struct ConfigError : Error {
    using Error::Error;
};

/// Mismatched dimensions between arguments that must agree.
struct DimensionError : Error {
    using Error::Error;
};

/// Matrix numerically singular; carries the condition estimate.
struct SingularMatrixError : Error {
    double condition;
    explicit SingularMatrixError(double cond)
        : Error("matrix is numerically singular (condition estimate " + std::to_string(cond) + ")"),
          condition(cond) {}
};

/// Matrix has a nonpositive eigenvalue where positive definiteness is required.
struct NotPositiveDefiniteError : Error {
    double min_eigenvalue;
    explicit NotPositiveDefiniteError(double min_eig)
        : Error("matrix is not positive definite (min eigenvalue " + std::to_string(min_eig) + ")"),
          min_eigenvalue(min_eig) {}
};

/// Data admits no meaningful answer (e.g. all points identical for the median heuristic).
struct DegenerateDataError : Error {
    using Error::Error;
};

/// Optimization produced a non-finite score or gradient.
struct DivergedError : Error {
    int iteration;
    explicit DivergedError(int iter)
        : Error("non-finite score or gradient at iteration " + std::to_string(iter)),
          iteration(iter) {}
};

/// File I/O failure; message includes the offending path.
struct IoError : Error {
    using Error::Error;
};

}  // namespace kscal
