#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace lmpgan::nn {

// Dense row-major double tensor. Layout convention across the library:
// activations are [batch, height, width, channels] (channels contiguous)
// or [batch, features] after flattening.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_[i]; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Index helpers for the two layouts in use.
  std::size_t offset4(std::size_t b, std::size_t i, std::size_t j, std::size_t c) const {
    return ((b * shape_[1] + i) * shape_[2] + j) * shape_[3] + c;
  }
  double& at4(std::size_t b, std::size_t i, std::size_t j, std::size_t c) {
    return data_[offset4(b, i, j, c)];
  }
  double at4(std::size_t b, std::size_t i, std::size_t j, std::size_t c) const {
    return data_[offset4(b, i, j, c)];
  }
  double& at2(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double at2(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }
  double& at3(std::size_t i, std::size_t j, std::size_t c) {
    return data_[(i * shape_[1] + j) * shape_[2] + c];
  }
  double at3(std::size_t i, std::size_t j, std::size_t c) const {
    return data_[(i * shape_[1] + j) * shape_[2] + c];
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;
  void fill(double value);

  // Same data, new shape (element counts must match).
  Tensor reshaped(std::vector<std::size_t> shape) const;

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::size_t shape_size(const std::vector<std::size_t>& shape);
std::string shape_string(const std::vector<std::size_t>& shape);

// Inner product of two equal-shape tensors.
double dot(const Tensor& a, const Tensor& b);

}  // namespace lmpgan::nn
