#pragma once

#include <stdexcept>
#include <string>

namespace rfolive {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: bad probabilities, shape mismatches, empty datasets.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// A request the implementation refuses to serve (caps, infinite classes).
class UnsupportedRequest : public Error {
public:
    using Error::Error;
};

/// Realizability or completeness broke at run time (e.g. an empty version space).
class AssumptionViolation : public Error {
public:
    using Error::Error;
};

/// Bad experiment configuration (CLI flags, missing files, unknown fixtures).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Random instance generator ran out of its attempt budget.
class GeneratorError : public Error {
public:
    using Error::Error;
};

}  // namespace rfolive
