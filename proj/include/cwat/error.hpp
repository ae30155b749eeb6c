#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cwat {

// Base class for every error the library raises. `kind()` lets callers (the
// CLI in particular) map failures onto exit codes without string matching.
class Error : public std::runtime_error {
 public:
  enum class Kind { Dimension, Config, Parse, Usage, Input, Numeric, Data, Io };

  Error(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error(Kind::Dimension, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(Kind::Config, what) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(Kind::Usage, what) {}
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(Kind::Input, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(Kind::Numeric, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(Kind::Data, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(Kind::Io, what) {}
};

// Structured EDF parse failure; `offset` is the byte position of the field
// (or record) that could not be decoded.
class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& what)
      : Error(Kind::Parse, what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset),
        reason_(what) {}

  std::size_t offset() const noexcept { return offset_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t offset_;
  std::string reason_;
};

}  // namespace cwat
