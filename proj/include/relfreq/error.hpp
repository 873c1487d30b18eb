#pragma once

#include <stdexcept>
#include <string>

namespace relfreq {

enum class ErrorKind {
  parse,
  nonpositive_rate,
  invalid_probability,
  disconnected_terminals,
  unknown_node,
  invalid_argument,
  cap_exceeded,
  plan_invalid,
  not_all_terminal,
  formula_false,
  io,
  schema_mismatch,
};

inline const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::parse: return "parse failure";
    case ErrorKind::nonpositive_rate: return "nonpositive rate";
    case ErrorKind::invalid_probability: return "invalid probability";
    case ErrorKind::disconnected_terminals: return "disconnected terminals";
    case ErrorKind::unknown_node: return "unknown node reference";
    case ErrorKind::invalid_argument: return "invalid argument";
    case ErrorKind::cap_exceeded: return "cap exceeded";
    case ErrorKind::plan_invalid: return "invalid plan";
    case ErrorKind::not_all_terminal: return "not all-terminal";
    case ErrorKind::formula_false: return "formula almost surely false";
    case ErrorKind::io: return "i/o error";
    case ErrorKind::schema_mismatch: return "schema mismatch";
  }
  return "unknown error";
}

/// Every failure raised by the library carries one of the kinds above so that
/// front ends can map it to a distinct diagnostic or exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace relfreq
