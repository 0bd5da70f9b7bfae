#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace azlab {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Additive mask value that marks a dropped attention connection.
inline constexpr double kMaskSentinel = -1e9;
/// Any additive mask entry at or below this value counts as dropped.
inline constexpr double kDropThreshold = -5e8;

inline bool is_dropped(double mask_value) { return mask_value <= kDropThreshold; }

/// Dense row-major double tensor with value semantics.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor(Shape{}, std::vector<double>{v}); }
  static Tensor vector(std::initializer_list<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t numel() const { return data_.size(); }
  std::size_t dim(std::size_t axis) const;
  /// Extent of the last axis (1 for scalars).
  std::size_t cols() const { return shape_.empty() ? 1 : shape_.back(); }
  /// Product of all extents except the last.
  std::size_t rows() const { return shape_.empty() ? 1 : numel() / (cols() == 0 ? 1 : cols()); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  double item() const;

  Tensor reshaped(Shape shape) const;

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Plain (non-differentiable) kernels shared by the autodiff graph and inference.
namespace kernels {

/// a[m×k] · b[k×n]; transpose flags apply to the stored operands.
Tensor matmul(const Tensor& a, const Tensor& b, bool transpose_a = false, bool transpose_b = false);
Tensor transpose(const Tensor& a);
/// Row-wise softmax over the last axis with an additive mask broadcast on that axis.
/// Dropped entries come out exactly 0; a fully dropped row is all zeros.
Tensor masked_softmax(const Tensor& scores, const Tensor& additive_mask);
double gelu(double x);
double gelu_grad(double x);

}  // namespace kernels

}  // namespace azlab
