#pragma once

#include <stdexcept>
#include <string>

namespace auscultrl {

// Base for every error raised by the library. Subclasses let callers tell
// malformed input apart from shape and range violations.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller violated a documented precondition.
class PreconditionError : public Error {
public:
    using Error::Error;
};

// Configuration values are out of their allowed domain.
class ConfigError : public Error {
public:
    using Error::Error;
};

// A document could not be parsed at all.
class FormatError : public Error {
public:
    using Error::Error;
};

// A document parsed but has the wrong shape (row count, profile count, layer size).
class StructureError : public Error {
public:
    using Error::Error;
};

// A value lies outside its allowed range.
class RangeError : public Error {
public:
    using Error::Error;
};

// A NaN or infinity showed up during a numeric computation.
class NumericError : public Error {
public:
    using Error::Error;
};

// Operation is not valid in the current state (finished episode, closed session).
class StateError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

} // namespace auscultrl
