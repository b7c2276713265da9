#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rmrecon {

enum class ErrorKind {
  Parse,
  Io,
  Domain,
  OutOfHemisphere,
  InvalidPixel,
  EmptyObservation,
  Initialization,
  Optimizer,
  Consistency,
  UndefinedDirection,
  LossUndefined,
  InvalidArgument,
  Divergence,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a machine-readable kind so the
// CLI can report it as JSON.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse: return "parse_error";
    case ErrorKind::Io: return "io_error";
    case ErrorKind::Domain: return "domain_error";
    case ErrorKind::OutOfHemisphere: return "out_of_hemisphere";
    case ErrorKind::InvalidPixel: return "invalid_pixel";
    case ErrorKind::EmptyObservation: return "empty_observation";
    case ErrorKind::Initialization: return "initialization_error";
    case ErrorKind::Optimizer: return "optimizer_error";
    case ErrorKind::Consistency: return "consistency_error";
    case ErrorKind::UndefinedDirection: return "undefined_direction";
    case ErrorKind::LossUndefined: return "loss_undefined";
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::Divergence: return "divergence";
  }
  return "unknown";
}

}  // namespace rmrecon
