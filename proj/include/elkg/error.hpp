#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace elkg {

/// Base of every error the toolkit throws. Catch this at process boundaries.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration: descriptors, mapping documents,
/// indicator tables, pipeline config.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A file or directory does not follow the layout it claims to follow.
class FormatError : public Error {
 public:
  FormatError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Text-level syntax error with a 1-based line and column (0 when unknown).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column = 0)
      : Error(where(line, column) + what), line_(line), column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string where(std::size_t line, std::size_t column) {
    if (line == 0) return {};
    std::string s = "line " + std::to_string(line);
    if (column != 0) s += ", column " + std::to_string(column);
    return s + ": ";
  }
  std::size_t line_;
  std::size_t column_;
};

/// Referential integrity violation between tables or graph entities.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// A series or span that is too short for the requested computation.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// Remote endpoint failure that survived the retry policy.
class TransientError : public Error {
 public:
  TransientError(const std::string& what, int status)
      : Error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

}  // namespace elkg
