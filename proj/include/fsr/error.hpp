#pragma once

#include <stdexcept>
#include <string>

namespace fsr {

// Base class for all toolkit errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// File system / decoding problems. CLI exit code 1.
struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};

// Invalid arguments, dimension mismatches, bad configuration. CLI exit code 2.
struct ArgumentError : Error {
  explicit ArgumentError(const std::string& msg) : Error(msg) {}
};

// Numeric failures: non-finite values, degenerate metric inputs. CLI exit code 3.
struct NumericError : Error {
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

}  // namespace fsr
