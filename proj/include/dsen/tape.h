#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "dsen/tensor.h"

namespace dsen {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
// tape that produced it is alive.
class Var {
 public:
  Var() = default;

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode gradient tape. Nodes are appended in evaluation order, so the
// tape order is a topological order and Backward() walks it in reverse.
// A tape belongs to one thread.
class Tape {
 public:
  // Receives the gradient flowing into the node's output and must push
  // contributions to its inputs through Accumulate().
  using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf that never receives a gradient.
  Var Constant(Tensor value);
  // Leaf that receives a gradient. Memoized by address, so one parameter used
  // at several places in a graph maps to a single node and its gradient is
  // the sum over all uses.
  Var Param(const Tensor& param);

  const Tensor& Value(Var v) const { return nodes_[v.id()].value; }
  const Tensor& ValueAt(std::size_t id) const { return nodes_[id].value; }
  bool RequiresGrad(std::size_t id) const { return nodes_[id].requires_grad; }

  // Seeds d(loss)/d(loss) = 1 and propagates. The loss must hold one element.
  void Backward(Var loss);

  // Gradient accumulated for v; zeros when nothing reached it.
  Tensor Grad(Var v) const;
  // Gradient for a parameter registered through Param(); zeros when the
  // parameter was never used.
  Tensor GradOf(const Tensor& param) const;

  std::size_t size() const { return nodes_.size(); }

  // Op-implementer surface.
  Var Record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var Record(Tensor value, std::span<const Var> inputs, BackwardFn backward);
  void Accumulate(std::size_t id, const Tensor& grad);
  void Accumulate(std::size_t id, Tensor&& grad);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, std::size_t> params_;
};

// Differentiable primitives over tape values. Batched layers keep one example
// per row.
Var MatMul(Var a, Var b);
// a · bᵀ
Var MatMulTransposedB(Var a, Var b);
// x + b broadcast over rows; b has x.cols() elements.
Var AddBias(Var x, Var b);
Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Hadamard(Var a, Var b);
Var Scale(Var a, double s);
// 1 - a
Var OneMinus(Var a);
Var Sigmoid(Var x);
Var Tanh(Var x);
Var Relu(Var x);
// Softmax across each row.
Var SoftmaxRows(Var x);
Var ConcatCols(std::span<const Var> parts);
Var SliceCols(Var x, std::size_t begin, std::size_t end);
// Sum of all entries, shape [1].
Var SumAll(Var x);
// Per-row inner product of equal-shape matrices, shape rows×1.
Var RowDot(Var a, Var b);
// Row r of x scaled by column[r]; column is rows×1.
Var ScaleRows(Var x, Var column);
// Mean binary cross-entropy of probabilities (any shape with labels.size()
// entries). Probabilities are clamped to [1e-12, 1 - 1e-12].
Var BinaryCrossEntropy(Var probs, std::span<const double> labels);

}  // namespace dsen
