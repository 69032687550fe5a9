#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace geomae {

// Operand shapes that cannot be combined.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation produced NaN/Inf or left its numeric domain.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The decoder is not an immersion at some batch point: the pullback metric
// has a non-positive determinant or eigenvalue there.
class NonImmersionError : public NumericError {
 public:
  NonImmersionError(std::size_t index, double value)
      : NumericError("non-positive pullback metric at batch index " + std::to_string(index) +
                     " (value " + std::to_string(value) + ")"),
        index_(index),
        value_(value) {}

  std::size_t index() const noexcept { return index_; }
  double value() const noexcept { return value_; }

 private:
  std::size_t index_;
  double value_;
};

// Malformed input file (CSV, raster, model container).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A file could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace geomae
