#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pc2depth {

enum class ErrorKind {
  Domain,      // violated precondition or invalid argument value
  Usage,       // bad command-line / configuration input
  Format,      // malformed file payload
  Protocol,    // malformed reply from an external service
  Transport,   // service unreachable
  Capability,  // provider cannot perform the requested mode
  Lookup,      // missing precomputed artifact
  Io,          // file system failure
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Exit code used by the command-line tool for each error category.
int exit_code(ErrorKind kind) noexcept;

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

}  // namespace pc2depth
