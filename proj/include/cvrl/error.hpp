#pragma once

#include <stdexcept>
#include <string>

namespace cvrl {

enum class ErrorCode {
  config = 1,   // invalid configuration / preconditions on parameters
  bounds = 2,   // out-of-range access or argument domain violation
  io = 3,       // file open/read/write failure
  format = 4,   // malformed file contents
  numeric = 5,  // numeric-domain violation (zero vector, non-finite loss)
  state = 6,    // operation invoked in the wrong order
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline Error config_error(const std::string& msg) { return Error(ErrorCode::config, msg); }
inline Error bounds_error(const std::string& msg) { return Error(ErrorCode::bounds, msg); }
inline Error io_error(const std::string& msg) { return Error(ErrorCode::io, msg); }
inline Error format_error(const std::string& msg) { return Error(ErrorCode::format, msg); }
inline Error numeric_error(const std::string& msg) { return Error(ErrorCode::numeric, msg); }
inline Error state_error(const std::string& msg) { return Error(ErrorCode::state, msg); }

}  // namespace cvrl
