#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace coherence {

/// Machine-readable failure classes. The numeric values double as CLI exit
/// codes.
enum class ErrorCode : int {
  config = 2,
  unstable = 3,
  parity = 4,
  oracle_cap = 5,
  validation = 6,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::config: return "CONFIG";
    case ErrorCode::unstable: return "UNSTABLE";
    case ErrorCode::parity: return "PARITY";
    case ErrorCode::oracle_cap: return "ORACLE_CAP";
    case ErrorCode::validation: return "VALIDATION";
  }
  return "UNKNOWN";
}

}  // namespace coherence
