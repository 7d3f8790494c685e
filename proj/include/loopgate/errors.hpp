#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace loopgate {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}

  /// Short machine-readable category, used by the CLI error line.
  virtual const char* kind() const noexcept { return "error"; }
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "invalid_argument"; }
};

/// se(3) log requested at a rotation angle of pi.
class BranchAmbiguity : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "branch_ambiguity"; }
};

/// Alignment input has (near) zero spread.
class DegenerateAlignment : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "degenerate_alignment"; }
};

class DisconnectedGraph : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "disconnected_graph"; }
};

class Unsatisfiable : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "unsatisfiable"; }
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& msg)
      : Error(source + ":" + std::to_string(line) + ": " + msg),
        source_(source),
        line_(line) {}

  const char* kind() const noexcept override { return "parse"; }
  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "io"; }
};

}  // namespace loopgate
