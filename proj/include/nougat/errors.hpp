#pragma once

#include <stdexcept>
#include <string>

namespace nougat {

// Bad parameters or contract violations detected before touching data.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent input data (CSV rows, dictionary files, ...).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure: singular systems, unstable recursions, non-PSD inputs.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace nougat
