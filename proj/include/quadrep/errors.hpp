#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace quadrep {

// Base class for failures of the numerics (as opposed to bad input).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RankDeficientError : public NumericalError {
 public:
  RankDeficientError(const std::string& what, std::size_t rank,
                     std::vector<std::size_t> dependent = {})
      : NumericalError(what), rank_(rank), dependent_(std::move(dependent)) {}

  std::size_t rank() const noexcept { return rank_; }
  // Original column indices judged numerically dependent.
  const std::vector<std::size_t>& dependent_columns() const noexcept { return dependent_; }

 private:
  std::size_t rank_;
  std::vector<std::size_t> dependent_;
};

class ComplexRootError : public NumericalError {
 public:
  ComplexRootError(const std::string& what, double discriminant)
      : NumericalError(what), discriminant_(discriminant) {}
  double discriminant() const noexcept { return discriminant_; }

 private:
  double discriminant_;
};

class PoleError : public NumericalError {
 public:
  PoleError(const std::string& what, double x) : NumericalError(what), x_(x) {}
  double x() const noexcept { return x_; }

 private:
  double x_;
};

class SingularSystemError : public NumericalError {
 public:
  SingularSystemError(const std::string& what, double condition,
                      std::vector<std::size_t> dependent = {})
      : NumericalError(what), condition_(condition), dependent_(std::move(dependent)) {}
  double condition() const noexcept { return condition_; }
  const std::vector<std::size_t>& dependent() const noexcept { return dependent_; }

 private:
  double condition_;
  std::vector<std::size_t> dependent_;
};

// Bad or non-finite input data (distinct from invalid arguments).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A JSON or CSV document that does not match the expected layout.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace quadrep
