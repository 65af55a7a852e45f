#pragma once

#include <stdexcept>
#include <string>

namespace qrelay {

/// Base of every error the library throws. `kind()` is the stable tag used on
/// the CLI's machine-readable error line.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error("domain", what) {}
};

/// Conditioning on an event of probability zero.
class ConditioningError : public Error {
 public:
  explicit ConditioningError(const std::string& what)
      : Error("conditioning", what) {}
};

/// Visibility requested where the out-of-dip coincidence probability is zero.
class UndefinedVisibilityError : public Error {
 public:
  explicit UndefinedVisibilityError(const std::string& what)
      : Error("undefined-visibility", what) {}
};

class CalibrationError : public Error {
 public:
  explicit CalibrationError(const std::string& what)
      : Error("calibration", what) {}
};

/// Malformed scenario, layout or configuration document.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

/// Unreadable input or unwritable output file.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io", what) {}
};

}  // namespace qrelay
