#pragma once

#include <stdexcept>
#include <string>

namespace calm {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, int line, int column)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// Missing provider entries, malformed checkpoints, bad config values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Every grounding is blocked by a hard component.
class Unsatisfiable : public Error {
 public:
  using Error::Error;
};

class Unsupported : public Error {
 public:
  using Error::Error;
};

// Enumeration would exceed the configured grounding cap.
class CapExceeded : public Error {
 public:
  using Error::Error;
};

class SamplingFailed : public Error {
 public:
  using Error::Error;
};

}  // namespace calm
