#pragma once

#include <stdexcept>
#include <string>

namespace mmm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operation needs a space (or law) of positive total mass.
class ZeroMass : public Error {
 public:
  explicit ZeroMass(const std::string& what) : Error("zero mass: " + what) {}
};

class InvalidMetric : public Error {
 public:
  explicit InvalidMetric(const std::string& what) : Error("invalid metric: " + what) {}
};

class InvalidSpace : public Error {
 public:
  explicit InvalidSpace(const std::string& what) : Error("invalid space: " + what) {}
};

/// Exact evaluation would exceed the configured term budget.
class BudgetExceeded : public Error {
 public:
  explicit BudgetExceeded(const std::string& what) : Error("budget exceeded: " + what) {}
};

class UnboundedTestFunction : public Error {
 public:
  explicit UnboundedTestFunction(const std::string& what)
      : Error("test function not certifiably bounded: " + what) {}
};

class PreconditionViolated : public Error {
 public:
  explicit PreconditionViolated(const std::string& what)
      : Error("precondition violated: " + what) {}
};

class NonPositiveMoment : public Error {
 public:
  explicit NonPositiveMoment(const std::string& what) : Error("non-positive moment: " + what) {}
};

class DegenerateGrid : public Error {
 public:
  explicit DegenerateGrid(const std::string& what) : Error("degenerate grid: " + what) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error("format error: " + what) {}
};

}  // namespace mmm
