#pragma once

#include <stdexcept>
#include <string>

namespace ctsched {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A network description or plant parameter violates its preconditions.
struct InvalidSpecError : Error {
    using Error::Error;
};

/// A state passed to a control-law query is not a canonical unit vector.
struct InvalidStateError : Error {
    using Error::Error;
};

/// The backward value ODE produced a non-finite state.
struct DivergenceError : Error {
    DivergenceError(const std::string& what, double time_of_blowup)
        : Error(what), time(time_of_blowup) {}
    double time;
};

/// Newton iteration exhausted its budget without meeting tolerance.
struct NoSolutionError : Error {
    NoSolutionError(const std::string& what, double last_residual)
        : Error(what), residual(last_residual) {}
    double residual;
};

/// A controlled operator fails to be an infinitesimal generator
/// (negative effective rate at a reachable position).
struct GeneratorViolationError : Error {
    using Error::Error;
};

/// The closed-loop chain is reducible, so no unique stationary
/// distribution exists.
struct NonErgodicError : Error {
    using Error::Error;
};

/// The chain reached a state with no outgoing rate.
struct AbsorbingStateError : Error {
    using Error::Error;
};

/// Fewer samples than a statistic requires.
struct InsufficientDataError : Error {
    using Error::Error;
};

/// A bound formula's hypothesis does not hold for these inputs.
struct BoundInapplicableError : Error {
    using Error::Error;
};

/// A bound's geometric-series factor diverges.
struct BoundDivergesError : Error {
    using Error::Error;
};

/// Numerical failure (indefinite covariance, singular innovation, ...).
struct NumericalError : Error {
    using Error::Error;
};

/// Malformed or inconsistent scenario configuration.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace ctsched
