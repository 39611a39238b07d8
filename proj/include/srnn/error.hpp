#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace srnn {

// Base of every library error. `code()` is the process exit code the CLI maps it to.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, int code = 1)
      : std::runtime_error(what), code_(code) {}
  int code() const noexcept { return code_; }

 private:
  int code_;
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(what, 1) {}
};

class GraphError : public Error {
 public:
  explicit GraphError(const std::string& what) : Error(what, 1) {}
};

class IndexError : public Error {
 public:
  explicit IndexError(const std::string& what) : Error(what, 1) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(what, 1) {}
};

class StateError : public Error {
 public:
  explicit StateError(const std::string& what) : Error(what, 1) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what, 1), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(what, 1) {}
};

class ImputationError : public Error {
 public:
  explicit ImputationError(const std::string& what) : Error(what, 1) {}
};

class ScalingError : public Error {
 public:
  explicit ScalingError(const std::string& what) : Error(what, 1) {}
};

class CheckpointError : public Error {
 public:
  explicit CheckpointError(const std::string& what) : Error(what, 1) {}
};

// NaN/Inf in losses or gradients.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(what, 2) {}
};

}  // namespace srnn
