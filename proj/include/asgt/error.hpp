#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace asgt {

enum class ErrorKind {
  invalid_argument,
  not_strongly_connected,
  singular_system,
  missing_publication,
  weight_channel_cold,
  degenerate_series,
  config_invalid,
  parse_error,
};

std::string_view to_string(ErrorKind kind);

// Every library failure is reported as an Error carrying a kind the caller can
// branch on; what() holds the human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::not_strongly_connected: return "not-strongly-connected";
    case ErrorKind::singular_system: return "singular-system";
    case ErrorKind::missing_publication: return "missing-publication";
    case ErrorKind::weight_channel_cold: return "weight-channel-cold";
    case ErrorKind::degenerate_series: return "degenerate-series";
    case ErrorKind::config_invalid: return "config-invalid";
    case ErrorKind::parse_error: return "parse-error";
  }
  return "unknown";
}

}  // namespace asgt
