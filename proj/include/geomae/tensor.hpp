#pragma once

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace geomae {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Dense row-major float64 array of rank 0, 1 or 2.
//
// Rank-1 tensors behave as row vectors wherever a 2D view is needed, so
// rows() == 1 and cols() == length. The optional gradient buffer is filled by
// Tape::backward for tensors bound as parameters.
class Tensor {
 public:
  Tensor() : shape_{}, data_(1, 0.0) {}
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor zeros_like(const Tensor& other);
  static Tensor from_matrix(const Matrix& m);

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t rows() const noexcept;
  std::size_t cols() const noexcept;

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  // Value of a single-element tensor.
  double item() const;

  Matrix to_matrix() const;
  Tensor reshaped(std::vector<std::size_t> shape) const;
  bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }
  bool all_finite() const noexcept;

  bool has_grad() const noexcept { return grad_.has_value(); }
  std::span<const double> grad() const;
  void accumulate_grad(std::span<const double> g);
  void clear_grad() noexcept { grad_.reset(); }

  std::string shape_string() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
  std::optional<std::vector<double>> grad_;
};

std::string shape_string(const std::vector<std::size_t>& shape);

}  // namespace geomae
