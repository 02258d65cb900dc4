#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace regkit {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression text. `position` is a 0-based byte offset.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t position, std::vector<std::string> expected,
              const std::string& what);
  std::size_t position() const { return position_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  std::size_t position_;
  std::vector<std::string> expected_;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class ExponentError : public Error {
 public:
  using Error::Error;
};

class DivisionByZero : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class PreconditionViolation : public Error {
 public:
  using Error::Error;
};

class SubsetCapExceeded : public Error {
 public:
  using Error::Error;
};

class LPFailure : public Error {
 public:
  using Error::Error;
};

class LowerLevelUnsolved : public Error {
 public:
  using Error::Error;
};

class GridTooLarge : public Error {
 public:
  using Error::Error;
};

class AllNodesInfeasible : public Error {
 public:
  using Error::Error;
};

class DegenerateDirection : public Error {
 public:
  using Error::Error;
};

/// Problem-file diagnostics; `line` is 1-based, 0 when unknown.
class ProblemFileError : public Error {
 public:
  ProblemFileError(int line, const std::string& what)
      : Error(what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace regkit
