#pragma once

#include <stdexcept>
#include <string>

namespace adaptlab {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape mismatch. `layer` is the offending layer index, or -1 when the
/// mismatch is not tied to a layer.
class DimensionError : public Error {
 public:
  DimensionError(const std::string& what, int layer = -1)
      : Error(layer >= 0 ? "layer " + std::to_string(layer) + ": " + what : what),
        layer_(layer) {}
  int layer() const noexcept { return layer_; }

 private:
  int layer_;
};

/// Malformed serialized document.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int layer = -1)
      : Error(layer >= 0 ? "parse error at layer " + std::to_string(layer) + ": " + what
                         : "parse error: " + what),
        layer_(layer) {}
  int layer() const noexcept { return layer_; }

 private:
  int layer_;
};

/// A named precondition was violated. `constraint()` carries the name so that
/// callers (the CLI in particular) can report it verbatim.
class PreconditionError : public Error {
 public:
  PreconditionError(std::string constraint, const std::string& detail)
      : Error(constraint + ": " + detail), constraint_(std::move(constraint)) {}
  const std::string& constraint() const noexcept { return constraint_; }

 private:
  std::string constraint_;
};

/// Raised when an internal invariant that the constructions guarantee fails
/// at runtime (e.g. residual selection finding zero or two winners).
class InvariantError : public Error {
 public:
  using Error::Error;
};

inline void require(bool ok, const char* constraint, const std::string& detail) {
  if (!ok) throw PreconditionError(constraint, detail);
}

}  // namespace adaptlab
