#pragma once

#include <stdexcept>
#include <string>

namespace fracsing {

/// Rejected input: bad grid, inadmissible (q, s), negative data, ...
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A solver could not reach its tolerance (Newton divergence, eigensolver cap).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A stiffness entry came out non-finite.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(int row, int col)
      : std::runtime_error("non-finite stiffness entry at (" + std::to_string(row) + ", " +
                           std::to_string(col) + ")"),
        row_(row),
        col_(col) {}

  int row() const { return row_; }
  int col() const { return col_; }

 private:
  int row_;
  int col_;
};

}  // namespace fracsing
