#include "dsen/tensor.h"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace dsen {
namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

ConstMap AsMatrix(const Tensor& t) {
  return ConstMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

MutMap AsMatrix(Tensor& t) {
  return MutMap(t.mutable_data().data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}

void RequireMatrix(const Tensor& t, const char* op) {
  if (t.rank() == 0 || t.rank() > 2) {
    throw DimensionError(std::string(op) + ": expected a vector or matrix, got " +
                         ShapeString(t.shape()));
  }
}

void RequireSameShape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         ShapeString(a.shape()) + " vs " + ShapeString(b.shape()));
  }
}

template <class F>
Tensor Map(const Tensor& x, F f) {
  Tensor out(x.shape());
  auto src = x.data();
  auto dst = out.mutable_data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  return out;
}

template <class F>
Tensor Zip(const Tensor& a, const Tensor& b, const char* op, F f) {
  RequireSameShape(a, b, op);
  Tensor out(a.shape());
  auto x = a.data();
  auto y = b.data();
  auto dst = out.mutable_data();
  for (std::size_t i = 0; i < x.size(); ++i) dst[i] = f(x[i], y[i]);
  return out;
}

}  // namespace

std::string ShapeString(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t NumElements(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(NumElements(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != NumElements(shape_)) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + ShapeString(shape_));
  }
}

Tensor Tensor::Vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::Vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::Matrix(std::size_t rows, std::size_t cols,
                      std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

Tensor Tensor::Identity(std::size_t n) {
  Tensor out({n, n});
  for (std::size_t i = 0; i < n; ++i) out.at(i, i) = 1.0;
  return out;
}

Tensor Tensor::Scalar(double value) { return Tensor({1}, {value}); }

std::size_t Tensor::rows() const {
  if (shape_.size() == 1) return 1;
  if (shape_.size() == 2) return shape_[0];
  throw DimensionError("rows() on tensor of shape " + ShapeString(shape_));
}

std::size_t Tensor::cols() const {
  if (shape_.size() == 1) return shape_[0];
  if (shape_.size() == 2) return shape_[1];
  throw DimensionError("cols() on tensor of shape " + ShapeString(shape_));
}

Tensor Tensor::Reshaped(Shape shape) const {
  return Tensor(std::move(shape), data_);
}

Tensor Tensor::Row(std::size_t r) const {
  const std::size_t c = cols();
  if (r >= rows()) throw DimensionError("row index out of range");
  return Tensor({c}, std::vector<double>(data_.begin() + r * c,
                                         data_.begin() + (r + 1) * c));
}

bool Tensor::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Tensor MatMul(const Tensor& a, const Tensor& b) {
  RequireMatrix(a, "matmul");
  RequireMatrix(b, "matmul");
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner extents differ, " + ShapeString(a.shape()) +
                         " x " + ShapeString(b.shape()));
  }
  Tensor out({a.rows(), b.cols()});
  AsMatrix(out).noalias() = AsMatrix(a) * AsMatrix(b);
  return out;
}

Tensor MatMulTransposedB(const Tensor& a, const Tensor& b) {
  RequireMatrix(a, "matmul_bt");
  RequireMatrix(b, "matmul_bt");
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_bt: inner extents differ, " +
                         ShapeString(a.shape()) + " x " + ShapeString(b.shape()) +
                         "^T");
  }
  Tensor out({a.rows(), b.rows()});
  AsMatrix(out).noalias() = AsMatrix(a) * AsMatrix(b).transpose();
  return out;
}

Tensor MatMulTransposedA(const Tensor& a, const Tensor& b) {
  RequireMatrix(a, "matmul_at");
  RequireMatrix(b, "matmul_at");
  if (a.rows() != b.rows()) {
    throw DimensionError("matmul_at: inner extents differ, " +
                         ShapeString(a.shape()) + "^T x " + ShapeString(b.shape()));
  }
  Tensor out({a.cols(), b.cols()});
  AsMatrix(out).noalias() = AsMatrix(a).transpose() * AsMatrix(b);
  return out;
}

Tensor Transpose(const Tensor& a) {
  RequireMatrix(a, "transpose");
  Tensor out({a.cols(), a.rows()});
  AsMatrix(out) = AsMatrix(a).transpose();
  return out;
}

Tensor Add(const Tensor& a, const Tensor& b) {
  return Zip(a, b, "add", [](double x, double y) { return x + y; });
}

Tensor Sub(const Tensor& a, const Tensor& b) {
  return Zip(a, b, "sub", [](double x, double y) { return x - y; });
}

Tensor Hadamard(const Tensor& a, const Tensor& b) {
  return Zip(a, b, "hadamard", [](double x, double y) { return x * y; });
}

Tensor Scale(const Tensor& a, double s) {
  return Map(a, [s](double x) { return x * s; });
}

double SigmoidScalar(double x) {
  // Sign split keeps exp() from overflowing for large |x|.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor Sigmoid(const Tensor& x) { return Map(x, SigmoidScalar); }

Tensor Tanh(const Tensor& x) {
  return Map(x, [](double v) { return std::tanh(v); });
}

Tensor Relu(const Tensor& x) {
  // NaN passes through so a corrupted input still surfaces downstream.
  return Map(x, [](double v) { return v > 0.0 || std::isnan(v) ? v : 0.0; });
}

Tensor Softmax(const Tensor& x, int axis) {
  RequireMatrix(x, "softmax");
  if (x.empty()) throw ContractError("softmax: empty input");
  if (x.rank() == 1 && axis == 0) axis = -1;
  const std::size_t rows = x.rows();
  const std::size_t cols = x.cols();
  Tensor out(x.shape());
  auto in = x.data();
  auto dst = out.mutable_data();
  if (axis == 1 || axis == -1) {
    for (std::size_t r = 0; r < rows; ++r) {
      const double* row = in.data() + r * cols;
      double* o = dst.data() + r * cols;
      const double mx = *std::max_element(row, row + cols);
      double total = 0.0;
      for (std::size_t c = 0; c < cols; ++c) total += (o[c] = std::exp(row[c] - mx));
      for (std::size_t c = 0; c < cols; ++c) o[c] /= total;
    }
  } else if (axis == 0) {
    for (std::size_t c = 0; c < cols; ++c) {
      double mx = in[c];
      for (std::size_t r = 1; r < rows; ++r) mx = std::max(mx, in[r * cols + c]);
      double total = 0.0;
      for (std::size_t r = 0; r < rows; ++r) {
        total += (dst[r * cols + c] = std::exp(in[r * cols + c] - mx));
      }
      for (std::size_t r = 0; r < rows; ++r) dst[r * cols + c] /= total;
    }
  } else {
    throw DimensionError("softmax: axis " + std::to_string(axis) +
                         " out of range for " + ShapeString(x.shape()));
  }
  return out;
}

double Sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return s;
}

double MaxAbsDiff(const Tensor& a, const Tensor& b) {
  RequireSameShape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

Tensor ConcatCols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const Tensor& p : parts) {
    if (p.rows() != rows) {
      throw DimensionError("concat_cols: row count mismatch " +
                           ShapeString(parts.front().shape()) + " vs " +
                           ShapeString(p.shape()));
    }
    cols += p.cols();
  }
  Tensor out(parts.front().rank() == 1 ? Shape{cols} : Shape{rows, cols});
  auto dst = out.mutable_data();
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t offset = r * cols;
    for (const Tensor& p : parts) {
      const std::size_t c = p.cols();
      std::copy_n(p.data().data() + r * c, c, dst.data() + offset);
      offset += c;
    }
  }
  return out;
}

Tensor StackRows(std::span<const Tensor> rows) {
  if (rows.empty()) throw ContractError("stack_rows: no inputs");
  const std::size_t width = rows.front().size();
  std::vector<double> data;
  data.reserve(width * rows.size());
  for (const Tensor& r : rows) {
    if (r.size() != width) {
      throw DimensionError("stack_rows: width mismatch " +
                           ShapeString(rows.front().shape()) + " vs " +
                           ShapeString(r.shape()));
    }
    data.insert(data.end(), r.data().begin(), r.data().end());
  }
  return Tensor({rows.size(), width}, std::move(data));
}

}  // namespace dsen
