#pragma once

#include <stdexcept>
#include <string>

namespace geocert {

// Base class for all library errors. Subclasses map 1:1 onto the C API
// status codes.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Precondition violation: bad argument values, inconsistent shapes,
// malformed configuration.
class InvalidInput : public Error {
public:
  explicit InvalidInput(const std::string& what) : Error(what) {}
};

// Scaling factor hits (or the parameter box crosses) zero.
class SingularTransform : public Error {
public:
  explicit SingularTransform(const std::string& what) : Error(what) {}
};

// A configured resource budget was exceeded (e.g. mesh cell count).
class ResourceLimit : public Error {
public:
  explicit ResourceLimit(const std::string& what) : Error(what) {}
};

// File / parse problems.
class IoError : public Error {
public:
  explicit IoError(const std::string& what) : Error(what) {}
};

}  // namespace geocert
