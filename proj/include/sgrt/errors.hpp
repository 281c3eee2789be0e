#pragma once

#include <stdexcept>
#include <string>

namespace sgrt {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class StateError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Raised when a mask pixel does not match any palette color.
class DecodeError : public Error {
 public:
  using Error::Error;
};

// Class with no positive pixels: recall is undefined.
class DegenerateClassError : public Error {
 public:
  using Error::Error;
};

enum class WeightFileFault { kCorruptHeader, kVersionMismatch, kTruncated, kChecksum };

class WeightFileError : public Error {
 public:
  WeightFileError(WeightFileFault fault, const std::string& what) : Error(what), fault_(fault) {}
  WeightFileFault fault() const noexcept { return fault_; }

 private:
  WeightFileFault fault_;
};

}  // namespace sgrt
