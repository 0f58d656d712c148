#pragma once

#include <stdexcept>
#include <string>

namespace wecfarm {

enum class ErrorKind {
  validation,  // bad argument or out-of-bounds input
  geometry,    // overlapping bodies, invalid cylinder proportions
  dimension,   // mismatched grid / matrix sizes
  degenerate,  // input has no spread (zero bandwidth, constant records)
  config,      // configuration file problems
  parse,       // malformed CSV / JSON
  io,          // filesystem failures
  numerical,   // iteration did not converge, residual check failed
  singular,    // singular linear system
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

}  // namespace wecfarm
