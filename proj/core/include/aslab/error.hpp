#pragma once

#include <stdexcept>
#include <string>

namespace aslab {

/// Broad failure classes; the CLI maps these onto process exit codes.
enum class ErrorKind {
  kShape,      // tensor or map dimensions disagree
  kConfig,     // malformed spec, config file or argument
  kIo,         // file cannot be opened, read or written
  kFormat,     // file opened but its content is malformed
  kNumeric,    // NaN/Inf, divergence, degenerate normalizer
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(ErrorKind::kShape, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::kConfig, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(ErrorKind::kFormat, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::kNumeric, what) {}
};

}  // namespace aslab
