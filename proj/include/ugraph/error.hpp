#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ugraph {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or missing TU dataset files.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Non-integer token where an integer was expected.
class ParseError : public FormatError {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& token)
      : FormatError(file + ":" + std::to_string(line) + ": expected integer, got '" + token + "'"),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// A flip list that cannot be applied to its graph (DELETE of absent edge or ADD of present edge).
class InconsistencyError : public Error {
 public:
  using Error::Error;
};

// Caller broke a documented precondition (shape mismatch, asymmetric input, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or gradient during training.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t where) : Error(what), where_(where) {}

  // Outer iteration or epoch index at which training diverged.
  std::size_t where() const noexcept { return where_; }

 private:
  std::size_t where_;
};

// Poisoned variants that do not line up with their clean dataset.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class StratificationError : public Error {
 public:
  using Error::Error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractViolation(msg);
}

}  // namespace ugraph
