#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hocurve {

/// Error categories surfaced by the library. The CLI maps each one to a
/// distinct exit status.
enum class ErrorCategory {
  Parameter = 10,
  Parse = 11,
  Unsupported = 12,
  Config = 13,
  DegenerateReference = 20,
  InvalidConfiguration = 21,
  Projection = 30,
  PeriodicMatching = 31,
  SingularSmoother = 40,
  NoConvergence = 41,
  Stagnation = 50,
  NotConverged = 51,
  Io = 60,
};

std::string_view category_name(ErrorCategory c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }
  int exit_code() const noexcept { return static_cast<int>(category_); }

 private:
  ErrorCategory category_;
};

}  // namespace hocurve
