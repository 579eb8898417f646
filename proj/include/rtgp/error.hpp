#pragma once

#include <stdexcept>
#include <string>

namespace rtgp {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller-supplied value is outside the operation's domain.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Shapes or indices of data structures disagree with each other.
class StructuralError : public Error {
public:
    using Error::Error;
};

/// Binary container could not be decoded.
class FormatError : public Error {
public:
    enum class Code { bad_magic, unsupported_version, truncated, dimension_mismatch, io };

    FormatError(Code code, const std::string& what) : Error(what), code_(code) {}

    Code code() const noexcept { return code_; }

private:
    Code code_;
};

/// A sampler step produced a non-finite or non-positive-definite quantity.
class NumericalFailure : public Error {
public:
    NumericalFailure(const std::string& what, long sweep = -1)
        : Error(sweep >= 0 ? what + " (sweep " + std::to_string(sweep) + ")" : what),
          sweep_(sweep) {}

    long sweep() const noexcept { return sweep_; }

private:
    long sweep_;
};

/// Run configuration is malformed, incomplete or names unknown keys.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace rtgp
