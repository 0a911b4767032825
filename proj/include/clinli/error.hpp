#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace clinli {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A primitive received operands whose shapes do not conform.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A file or record could not be parsed. `line()` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A configuration value is missing, unknown or invalid. `key()` names it.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : Error(key + ": " + what), key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Training diverged or produced a non-finite value.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace clinli
