#pragma once

#include <stdexcept>
#include <string>

namespace ktuplet {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape or length mismatch between operands.
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// Normalization requested for a vector with near-zero norm.
class DegenerateVectorError : public Error {
 public:
  explicit DegenerateVectorError(const std::string& msg) : Error(msg) {}
};

// Malformed input file; message carries the 1-based line number.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& msg) : Error(msg) {}
};

// Invalid configuration parameter.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Dataset cannot satisfy a sampling request.
class SamplingError : public Error {
 public:
  explicit SamplingError(const std::string& msg) : Error(msg) {}
};

// Invalid class split (overlapping or unknown classes).
class SplitError : public Error {
 public:
  explicit SplitError(const std::string& msg) : Error(msg) {}
};

// Optimizer halted (e.g. non-finite gradient).
class OptimizerError : public Error {
 public:
  explicit OptimizerError(const std::string& msg) : Error(msg) {}
};

// Filesystem failure while reading or writing artifacts.
class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace ktuplet
