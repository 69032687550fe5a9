#include "geomae/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "geomae/errors.hpp"

namespace geomae {

namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void check_rank(const std::vector<std::size_t>& shape) {
  if (shape.size() > 2) {
    throw ShapeError("tensors of rank > 2 are not supported: " + shape_string(shape));
  }
}

}  // namespace

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
  check_rank(shape_);
  data_.assign(element_count(shape_), 0.0);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_rank(shape_);
  if (element_count(shape_) != data_.size()) {
    throw ShapeError("shape " + geomae::shape_string(shape_) + " does not match " +
                     std::to_string(data_.size()) + " values");
  }
}

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::vector(std::vector<double> values) {
  const auto n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::zeros_like(const Tensor& other) { return Tensor(other.shape_); }

Tensor Tensor::from_matrix(const Matrix& m) {
  const auto r = static_cast<std::size_t>(m.rows());
  const auto c = static_cast<std::size_t>(m.cols());
  return Tensor({r, c}, std::vector<double>(m.data(), m.data() + m.size()));
}

std::size_t Tensor::rows() const noexcept { return shape_.size() == 2 ? shape_[0] : 1; }

std::size_t Tensor::cols() const noexcept {
  if (shape_.empty()) return 1;
  return shape_.back();
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw ShapeError("item() on tensor of shape " + geomae::shape_string(shape_));
  }
  return data_[0];
}

Matrix Tensor::to_matrix() const {
  Matrix m(static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols()));
  std::copy(data_.begin(), data_.end(), m.data());
  return m;
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const {
  return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::span<const double> Tensor::grad() const {
  if (!grad_) throw std::logic_error("tensor has no gradient; run backward first");
  return *grad_;
}

void Tensor::accumulate_grad(std::span<const double> g) {
  if (g.size() != data_.size()) {
    throw ShapeError("gradient size mismatch for tensor " + geomae::shape_string(shape_));
  }
  if (!grad_) {
    grad_.emplace(g.begin(), g.end());
    return;
  }
  for (std::size_t i = 0; i < g.size(); ++i) (*grad_)[i] += g[i];
}

std::string Tensor::shape_string() const { return geomae::shape_string(shape_); }

}  // namespace geomae
