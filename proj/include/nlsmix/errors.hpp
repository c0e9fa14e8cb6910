#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nlsmix {

/// Machine-readable failure classes surfaced by the CLI as exit categories.
enum class ErrorCategory {
  validation,  ///< malformed parameters or configuration
  regime,      ///< operation requested outside the regime it is defined for
  shooting,    ///< no bracket found for the radial shooting problem
  solver,      ///< stationary-state solver could not reach the requested state
  no_branch,   ///< requested solution branch does not exist for these data
  flow,        ///< gradient flow left the admissible set or did not converge
  structure,   ///< fiber map lacks the critical-point structure expected
  io,
};

constexpr std::string_view to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::validation: return "validation";
    case ErrorCategory::regime: return "regime";
    case ErrorCategory::shooting: return "shooting";
    case ErrorCategory::solver: return "solver";
    case ErrorCategory::no_branch: return "no_branch";
    case ErrorCategory::flow: return "flow";
    case ErrorCategory::structure: return "structure";
    case ErrorCategory::io: return "io";
  }
  return "unknown";
}

/// Process exit code used by the CLI for each category (0 is success).
constexpr int exit_code(ErrorCategory c) { return 2 + static_cast<int>(c); }

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(std::string(to_string(category)) + ": " + message),
        category_(category),
        detail_(message) {}

  [[nodiscard]] ErrorCategory category() const noexcept { return category_; }
  [[nodiscard]] const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCategory category_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorCategory category, const std::string& message) {
  throw Error(category, message);
}

}  // namespace nlsmix
