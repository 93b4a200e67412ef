#pragma once

#include <stdexcept>
#include <string>

namespace phasecal {

// Base for every error the library raises. Callers at the CLI boundary map
// these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. Carries the offending path and 1-based line number
// (0 when the problem is not tied to a single line).
class ParseError : public Error {
 public:
  ParseError(std::string path, std::size_t line, const std::string& what)
      : Error(path + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + what),
        path_(std::move(path)),
        line_(line) {}

  const std::string& path() const noexcept { return path_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string path_;
  std::size_t line_;
};

// Precondition on arguments violated (shape mismatch, out-of-range value...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace phasecal
