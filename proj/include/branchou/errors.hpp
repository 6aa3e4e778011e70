#pragma once

#include <stdexcept>
#include <string>

namespace branchou {

// Every error carries the CLI exit code it maps to.
class Error : public std::runtime_error {
 public:
  Error(const std::string& what, int exit_code)
      : std::runtime_error(what), exit_code_(exit_code) {}
  int exit_code() const noexcept { return exit_code_; }

 private:
  int exit_code_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error("configuration error: " + what, 2) {}
};

struct ArgumentError : Error {
  explicit ArgumentError(const std::string& what) : Error("argument error: " + what, 2) {}
};

struct StateError : Error {
  explicit StateError(const std::string& what) : Error("state error: " + what, 2) {}
};

struct DomainError : Error {
  explicit DomainError(const std::string& what) : Error("domain error: " + what, 3) {}
};

struct NumericalError : Error {
  explicit NumericalError(const std::string& what) : Error("numerical error: " + what, 3) {}
};

struct ResourceError : Error {
  explicit ResourceError(const std::string& what) : Error("resource error: " + what, 4) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error("io error: " + what, 4) {}
};

struct ParseError : Error {
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : Error("parse error: " + path + ":" + std::to_string(line) + ": " + what, 4), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace branchou
