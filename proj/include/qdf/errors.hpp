#pragma once

#include <stdexcept>
#include <string>

namespace qdf {

// Every failure raised by the library derives from qdf::Error. The CLI maps
// the category onto a process exit code.
enum class ErrorKind {
  Argument,        // malformed input, invalid permutation, odd N, ...
  Shape,           // dimension / length mismatch
  Overflow,        // integer dimension arithmetic would overflow
  Resource,        // problem exceeds the desk-scale limits
  Invariant,       // non-Hermitian, not PSD, bad trace, bad Bloch vector
  NotPositiveDefinite,
  NotInformationallyComplete,
  Normalization,
  NotAWitness,
  DegeneratePosterior,
  PriorSupport,
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

}  // namespace qdf
