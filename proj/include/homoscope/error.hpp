#pragma once

#include <stdexcept>
#include <string>

namespace homoscope {

enum class ErrorKind {
  Parse,            // malformed token in an input file or config
  Format,           // structurally invalid input (index out of range, ragged rows, ...)
  Validation,       // parameters violate a documented precondition
  UndefinedMetric,  // metric has no value on this input (edgeless graph, single class, ...)
  DegenerateNode,   // aggregation would divide by a zero degree
  Numerical,        // quadrature or linear solve could not reach tolerance
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Carries the error bound the quadrature actually achieved.
class AccuracyError : public Error {
 public:
  AccuracyError(const std::string& what, double achieved_bound)
      : Error(ErrorKind::Numerical, what), achieved_bound_(achieved_bound) {}
  double achieved_bound() const noexcept { return achieved_bound_; }

 private:
  double achieved_bound_;
};

const char* to_string(ErrorKind kind);

}  // namespace homoscope
