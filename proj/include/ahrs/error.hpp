#ifndef AHRS_ERROR_HPP_
#define AHRS_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace ahrs {

enum class ErrorKind {
  NonFiniteState,
  InvalidConfig,
  SingularN,
  NoConvergence,
  SingularInnovation,
  IndexOutOfRange,
  MissingGains,
  InvalidGains,
  DegenerateGeometry,
  EmptyWindow,
  Parse,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonFiniteState: return "NonFiniteState";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::SingularN: return "SingularN";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::SingularInnovation: return "SingularInnovation";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::MissingGains: return "MissingGains";
    case ErrorKind::InvalidGains: return "InvalidGains";
    case ErrorKind::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorKind::EmptyWindow: return "EmptyWindow";
    case ErrorKind::Parse: return "Parse";
  }
  return "Unknown";
}

/// Library-wide exception. `value` carries a numeric detail when one exists
/// (last residual for NoConvergence, sample time for NonFiniteState, line
/// number for Parse).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, double value = 0.0)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind),
        value_(value) {}

  ErrorKind kind() const noexcept { return kind_; }
  double value() const noexcept { return value_; }

 private:
  ErrorKind kind_;
  double value_;
};

}  // namespace ahrs

#endif  // AHRS_ERROR_HPP_
