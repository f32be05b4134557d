#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gateway {

/// Failure categories. The names double as the flag strings written into
/// JSON reports, so keep them stable.
enum class ErrorKind {
  Input,
  Capability,
  Numeric,
  GaugeDegeneracy,
  DarkState,
  FewerPeaks,
  Underdetermined,
  NearZeroDivision,
  InconsistentData,
  IllConditioned,
  RankDeficientUnresolvable,
  SignAmbiguity,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// Input problems map to exit code 2, everything else is a method-level
  /// failure (exit code 1).
  bool is_input_error() const noexcept { return kind_ == ErrorKind::Input; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace gateway
