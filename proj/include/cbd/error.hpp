#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cbd {

enum class ErrorKind {
  InvalidInput,
  Precondition,
  InsufficientSample,
  DegenerateScale,
  InvalidScenario,
  InvalidParameter,
  InvalidModel,
  Schema,
  Usage,
};

std::string_view to_string(ErrorKind kind);

/// Library-wide exception. `kind` lets callers map failures to exit codes
/// without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) throw Error(kind, what);
}

}  // namespace cbd
