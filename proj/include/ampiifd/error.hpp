#pragma once

#include <stdexcept>
#include <string>

namespace ampiifd {

/// Broad failure classes. The CLI maps these onto process exit codes.
enum class ErrorKind {
  InvalidArgument,  // precondition violated by a caller
  Input,            // unreadable / malformed file or image
  Config,           // bad configuration key or value
  Degenerate,       // numerically degenerate geometry or data
  NoModel,          // robust fitting could not find a model
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorKind::InvalidArgument, what);
}

}  // namespace ampiifd
