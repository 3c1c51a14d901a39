#pragma once

#include <stdexcept>
#include <string>

namespace levyhjm {

/// How a failure should be reported by the command-line runner.
enum class ErrorKind { Validation, Numerical };

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual ErrorKind kind() const noexcept { return ErrorKind::Validation; }
};

#define LEVYHJM_DECLARE_ERROR(Name, Kind)                                 \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string& what) : Error(what) {}               \
    ErrorKind kind() const noexcept override { return ErrorKind::Kind; } \
  };

// A set that touches zero, a time outside the horizon, and so on.
LEVYHJM_DECLARE_ERROR(DomainError, Validation)
LEVYHJM_DECLARE_ERROR(BoundError, Validation)
LEVYHJM_DECLARE_ERROR(MaturityError, Validation)
LEVYHJM_DECLARE_ERROR(NotConcentratedError, Validation)
LEVYHJM_DECLARE_ERROR(DegenerateStopError, Validation)

LEVYHJM_DECLARE_ERROR(DivergenceError, Numerical)
LEVYHJM_DECLARE_ERROR(ClassError, Numerical)
LEVYHJM_DECLARE_ERROR(MomentError, Numerical)
LEVYHJM_DECLARE_ERROR(SingularityError, Numerical)
LEVYHJM_DECLARE_ERROR(ReconstructionError, Numerical)

#undef LEVYHJM_DECLARE_ERROR

/// Invalid scenario input. Carries the dotted TOML path of the offending key.
class ValidationError : public Error {
 public:
  ValidationError(std::string path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace levyhjm
