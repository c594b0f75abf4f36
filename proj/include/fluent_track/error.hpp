#pragma once

#include <stdexcept>
#include <string>

namespace fluent_track {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input (bad file, bad dimensions, bad arguments).
class InputError : public Error {
public:
    using Error::Error;
};

/// Homogeneous coordinate collapsed to zero when mapping to the ground plane.
class DegenerateProjection : public InputError {
public:
    using InputError::InputError;
};

/// Problem instance larger than a solver's guard rails allow.
class LimitExceeded : public InputError {
public:
    using InputError::InputError;
};

/// An internal bookkeeping invariant failed; indicates a bug, not bad input.
class InvariantViolation : public Error {
public:
    using Error::Error;
};

}  // namespace fluent_track
