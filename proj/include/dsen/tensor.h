#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dsen {

// Raised when operand shapes are incompatible.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a caller violates a documented precondition.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

using Shape = std::vector<std::size_t>;

std::string ShapeString(const Shape& shape);

// Dense row-major tensor of doubles. Rank 1 and rank 2 are the only ranks the
// library produces; rank-1 tensors act as row vectors in matrix operations.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor Vector(std::initializer_list<double> values);
  static Tensor Vector(std::vector<double> values);
  static Tensor Matrix(std::size_t rows, std::size_t cols,
                       std::initializer_list<double> values);
  static Tensor Identity(std::size_t n);
  static Tensor Scalar(double value);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Matrix view: rank-1 tensors are 1×n.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const { return data_; }
  std::span<double> mutable_data() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }

  // Same data, new shape with equal element count.
  Tensor Reshaped(Shape shape) const;
  Tensor Row(std::size_t r) const;

  bool SameShape(const Tensor& other) const { return shape_ == other.shape_; }
  bool AllFinite() const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

std::size_t NumElements(const Shape& shape);

// Elementwise and matrix primitives. All are pure.
Tensor MatMul(const Tensor& a, const Tensor& b);
// a · bᵀ
Tensor MatMulTransposedB(const Tensor& a, const Tensor& b);
// aᵀ · b
Tensor MatMulTransposedA(const Tensor& a, const Tensor& b);
Tensor Transpose(const Tensor& a);

Tensor Add(const Tensor& a, const Tensor& b);
Tensor Sub(const Tensor& a, const Tensor& b);
Tensor Hadamard(const Tensor& a, const Tensor& b);
Tensor Scale(const Tensor& a, double s);

Tensor Sigmoid(const Tensor& x);
Tensor Tanh(const Tensor& x);
Tensor Relu(const Tensor& x);
// axis 0 normalizes down columns, axis 1 (or -1) across rows. Rank-1 inputs
// only accept axis 0 / -1.
Tensor Softmax(const Tensor& x, int axis = -1);

double SigmoidScalar(double x);

double Sum(const Tensor& x);
double MaxAbsDiff(const Tensor& a, const Tensor& b);

// Column-wise concatenation of matrices with equal row counts.
Tensor ConcatCols(std::span<const Tensor> parts);
// Row-wise stack of rank-1 or 1×n tensors of equal width.
Tensor StackRows(std::span<const Tensor> rows);

}  // namespace dsen
