#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace det3d {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Index outside a declared extent.
class BoundsError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation (non-finite
// angles, nonpositive depths, empty reductions).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Result not representable (overflow/underflow of a decoded quantity).
class RangeError : public Error {
 public:
  using Error::Error;
};

// Inconsistent configuration: channel counts, thresholds, window sizes.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Camera geometry failures: points behind the camera, degenerate projections.
class GeometryError : public Error {
 public:
  using Error::Error;
};

// Malformed input data. Carries the line number (text formats) or the byte
// offset (binary formats) when known.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what,
                      std::optional<std::size_t> line = std::nullopt,
                      std::optional<std::size_t> offset = std::nullopt)
      : Error(what), line_(line), offset_(offset) {}

  std::optional<std::size_t> line() const noexcept { return line_; }
  std::optional<std::size_t> offset() const noexcept { return offset_; }

 private:
  std::optional<std::size_t> line_;
  std::optional<std::size_t> offset_;
};

// Cross-file consistency failures (missing frame ids and the like).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Scene synthesis could not satisfy its placement constraints.
class GenerationError : public Error {
 public:
  using Error::Error;
};

// Ideal-map rendering of a scene that does not fit the feature map.
class RenderError : public Error {
 public:
  using Error::Error;
};

// Filesystem failures. The message names the path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace det3d
