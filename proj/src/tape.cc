#include "dsen/tape.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace dsen {
namespace {

constexpr double kProbClamp = 1e-12;

Tape& SameTape(Var a, Var b, const char* op) {
  if (!a.valid() || a.tape() != b.tape()) {
    throw ContractError(std::string(op) + ": operands belong to different tapes");
  }
  return *a.tape();
}

void RequireSameShape(Var a, Var b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         ShapeString(a.shape()) + " vs " + ShapeString(b.shape()));
  }
}

// Elementwise unary op whose derivative is expressed through the output.
template <class Fwd, class DerivFromOut>
Var UnaryFromOutput(Var x, Fwd fwd, DerivFromOut deriv) {
  Tape& tape = *x.tape();
  Tensor out = fwd(x.value());
  const std::size_t xid = x.id();
  Tensor out_copy = out;
  return tape.Record(std::move(out), {x},
                     [xid, y = std::move(out_copy), deriv](Tape& t, const Tensor& g) {
                       Tensor dx(g.shape());
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         dx[i] = g[i] * deriv(y[i]);
                       }
                       t.Accumulate(xid, std::move(dx));
                     });
}

}  // namespace

const Tensor& Var::value() const {
  if (!tape_) throw ContractError("use of an unbound Var");
  return tape_->Value(*this);
}

Var Tape::Constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), Tensor(), false, false, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::Param(const Tensor& param) {
  if (auto it = params_.find(&param); it != params_.end()) return Var(this, it->second);
  nodes_.push_back(Node{param, Tensor(), true, false, nullptr});
  params_.emplace(&param, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Tape::Record(Tensor value, std::initializer_list<Var> inputs,
                 BackwardFn backward) {
  return Record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(backward));
}

Var Tape::Record(Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  bool needs = false;
  for (Var in : inputs) {
    if (in.tape() != this) throw ContractError("input recorded on a different tape");
    needs = needs || nodes_[in.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), Tensor(), needs, false,
                        needs ? std::move(backward) : nullptr});
  return Var(this, nodes_.size() - 1);
}

void Tape::Accumulate(std::size_t id, const Tensor& grad) {
  Node& node = nodes_[id];
  if (!node.requires_grad) return;
  if (!node.has_grad) {
    node.grad = grad;
    node.has_grad = true;
    return;
  }
  auto dst = node.grad.mutable_data();
  auto src = grad.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void Tape::Accumulate(std::size_t id, Tensor&& grad) {
  Node& node = nodes_[id];
  if (!node.requires_grad) return;
  if (!node.has_grad) {
    node.grad = std::move(grad);
    node.has_grad = true;
    return;
  }
  auto dst = node.grad.mutable_data();
  auto src = grad.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void Tape::Backward(Var loss) {
  if (loss.tape() != this) throw ContractError("backward: loss from another tape");
  if (loss.value().size() != 1) {
    throw ContractError("backward: loss must be scalar, got shape " +
                        ShapeString(loss.shape()));
  }
  for (Node& n : nodes_) {
    n.has_grad = false;
    n.grad = Tensor();
  }
  Accumulate(loss.id(), Tensor(loss.shape(), 1.0));
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backward) continue;
    // Contributions only flow to lower ids, so this grad is final.
    n.backward(*this, n.grad);
  }
}

Tensor Tape::Grad(Var v) const {
  const Node& n = nodes_[v.id()];
  return n.has_grad ? n.grad : Tensor(n.value.shape());
}

Tensor Tape::GradOf(const Tensor& param) const {
  auto it = params_.find(&param);
  if (it == params_.end()) return Tensor(param.shape());
  return Grad(Var(const_cast<Tape*>(this), it->second));
}

Var MatMul(Var a, Var b) {
  Tape& tape = SameTape(a, b, "matmul");
  const std::size_t aid = a.id(), bid = b.id();
  return tape.Record(dsen::MatMul(a.value(), b.value()), {a, b},
                     [aid, bid](Tape& t, const Tensor& g) {
                       const Tensor& av = t.ValueAt(aid);
                       const Tensor& bv = t.ValueAt(bid);
                       if (t.RequiresGrad(aid)) {
                         t.Accumulate(aid, dsen::MatMulTransposedB(g, bv).Reshaped(av.shape()));
                       }
                       if (t.RequiresGrad(bid)) {
                         t.Accumulate(bid, dsen::MatMulTransposedA(
                                               av.Reshaped({av.rows(), av.cols()}), g)
                                               .Reshaped(bv.shape()));
                       }
                     });
}

Var MatMulTransposedB(Var a, Var b) {
  Tape& tape = SameTape(a, b, "matmul_bt");
  const std::size_t aid = a.id(), bid = b.id();
  return tape.Record(dsen::MatMulTransposedB(a.value(), b.value()), {a, b},
                     [aid, bid](Tape& t, const Tensor& g) {
                       const Tensor& av = t.ValueAt(aid);
                       const Tensor& bv = t.ValueAt(bid);
                       // out = a bᵀ: da = g b, db = gᵀ a
                       if (t.RequiresGrad(aid)) {
                         t.Accumulate(aid, dsen::MatMul(g, bv.Reshaped({bv.rows(), bv.cols()}))
                                               .Reshaped(av.shape()));
                       }
                       if (t.RequiresGrad(bid)) {
                         t.Accumulate(bid, dsen::MatMulTransposedA(
                                               g, av.Reshaped({av.rows(), av.cols()}))
                                               .Reshaped(bv.shape()));
                       }
                     });
}

Var AddBias(Var x, Var b) {
  Tape& tape = SameTape(x, b, "add_bias");
  const Tensor& xv = x.value();
  const Tensor& bv = b.value();
  if (bv.size() != xv.cols()) {
    throw DimensionError("add_bias: bias " + ShapeString(bv.shape()) +
                         " does not match " + ShapeString(xv.shape()));
  }
  Tensor out = xv;
  const std::size_t rows = xv.rows(), cols = xv.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += bv[c];
  }
  const std::size_t xid = x.id(), bid = b.id();
  return tape.Record(std::move(out), {x, b},
                     [xid, bid, rows, cols](Tape& t, const Tensor& g) {
                       if (t.RequiresGrad(bid)) {
                         Tensor db(t.ValueAt(bid).shape());
                         for (std::size_t r = 0; r < rows; ++r) {
                           for (std::size_t c = 0; c < cols; ++c) db[c] += g[r * cols + c];
                         }
                         t.Accumulate(bid, std::move(db));
                       }
                       t.Accumulate(xid, g);
                     });
}

Var Add(Var a, Var b) {
  Tape& tape = SameTape(a, b, "add");
  RequireSameShape(a, b, "add");
  const std::size_t aid = a.id(), bid = b.id();
  return tape.Record(dsen::Add(a.value(), b.value()), {a, b},
                     [aid, bid](Tape& t, const Tensor& g) {
                       t.Accumulate(aid, g);
                       t.Accumulate(bid, g);
                     });
}

Var Sub(Var a, Var b) {
  Tape& tape = SameTape(a, b, "sub");
  RequireSameShape(a, b, "sub");
  const std::size_t aid = a.id(), bid = b.id();
  return tape.Record(dsen::Sub(a.value(), b.value()), {a, b},
                     [aid, bid](Tape& t, const Tensor& g) {
                       t.Accumulate(aid, g);
                       if (t.RequiresGrad(bid)) t.Accumulate(bid, dsen::Scale(g, -1.0));
                     });
}

Var Hadamard(Var a, Var b) {
  Tape& tape = SameTape(a, b, "hadamard");
  RequireSameShape(a, b, "hadamard");
  const std::size_t aid = a.id(), bid = b.id();
  return tape.Record(dsen::Hadamard(a.value(), b.value()), {a, b},
                     [aid, bid](Tape& t, const Tensor& g) {
                       if (t.RequiresGrad(aid)) {
                         t.Accumulate(aid, dsen::Hadamard(g, t.ValueAt(bid)));
                       }
                       if (t.RequiresGrad(bid)) {
                         t.Accumulate(bid, dsen::Hadamard(g, t.ValueAt(aid)));
                       }
                     });
}

Var Scale(Var a, double s) {
  const std::size_t aid = a.id();
  return a.tape()->Record(dsen::Scale(a.value(), s), {a},
                          [aid, s](Tape& t, const Tensor& g) {
                            t.Accumulate(aid, dsen::Scale(g, s));
                          });
}

Var OneMinus(Var a) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 - a.value()[i];
  const std::size_t aid = a.id();
  return a.tape()->Record(std::move(out), {a}, [aid](Tape& t, const Tensor& g) {
    t.Accumulate(aid, dsen::Scale(g, -1.0));
  });
}

Var Sigmoid(Var x) {
  return UnaryFromOutput(
      x, [](const Tensor& v) { return dsen::Sigmoid(v); },
      [](double y) { return y * (1.0 - y); });
}

Var Tanh(Var x) {
  return UnaryFromOutput(
      x, [](const Tensor& v) { return dsen::Tanh(v); },
      [](double y) { return 1.0 - y * y; });
}

Var Relu(Var x) {
  return UnaryFromOutput(
      x, [](const Tensor& v) { return dsen::Relu(v); },
      [](double y) { return y > 0.0 ? 1.0 : 0.0; });
}

Var SoftmaxRows(Var x) {
  Tensor out = dsen::Softmax(x.value(), -1);
  const std::size_t xid = x.id();
  Tensor y = out;
  return x.tape()->Record(std::move(out), {x},
                          [xid, y = std::move(y)](Tape& t, const Tensor& g) {
                            const std::size_t rows = y.rows(), cols = y.cols();
                            Tensor dx(y.shape());
                            for (std::size_t r = 0; r < rows; ++r) {
                              double dot = 0.0;
                              for (std::size_t c = 0; c < cols; ++c) {
                                dot += g[r * cols + c] * y[r * cols + c];
                              }
                              for (std::size_t c = 0; c < cols; ++c) {
                                const std::size_t i = r * cols + c;
                                dx[i] = y[i] * (g[i] - dot);
                              }
                            }
                            t.Accumulate(xid, std::move(dx));
                          });
}

Var ConcatCols(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  Tape& tape = *parts.front().tape();
  std::vector<Tensor> values;
  values.reserve(parts.size());
  std::vector<std::size_t> ids, widths;
  for (Var p : parts) {
    if (p.tape() != &tape) throw ContractError("concat_cols: mixed tapes");
    values.push_back(p.value());
    ids.push_back(p.id());
    widths.push_back(p.value().cols());
  }
  Tensor out = dsen::ConcatCols(values);
  const std::size_t rows = out.rows(), total = out.cols();
  return tape.Record(std::move(out), parts,
                     [ids, widths, rows, total](Tape& t, const Tensor& g) {
                       std::size_t offset = 0;
                       for (std::size_t k = 0; k < ids.size(); ++k) {
                         const std::size_t w = widths[k];
                         if (t.RequiresGrad(ids[k])) {
                           Tensor part(t.ValueAt(ids[k]).shape());
                           for (std::size_t r = 0; r < rows; ++r) {
                             std::copy_n(g.data().data() + r * total + offset, w,
                                         part.mutable_data().data() + r * w);
                           }
                           t.Accumulate(ids[k], std::move(part));
                         }
                         offset += w;
                       }
                     });
}

Var SliceCols(Var x, std::size_t begin, std::size_t end) {
  const Tensor& xv = x.value();
  const std::size_t rows = xv.rows(), cols = xv.cols();
  if (begin >= end || end > cols) {
    throw DimensionError("slice_cols: [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") out of range for " +
                         ShapeString(xv.shape()));
  }
  const std::size_t w = end - begin;
  Tensor out(xv.rank() == 1 ? Shape{w} : Shape{rows, w});
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(xv.data().data() + r * cols + begin, w,
                out.mutable_data().data() + r * w);
  }
  const std::size_t xid = x.id();
  return x.tape()->Record(std::move(out), {x},
                          [xid, rows, cols, begin, w](Tape& t, const Tensor& g) {
                            Tensor dx(t.ValueAt(xid).shape());
                            for (std::size_t r = 0; r < rows; ++r) {
                              std::copy_n(g.data().data() + r * w, w,
                                          dx.mutable_data().data() + r * cols + begin);
                            }
                            t.Accumulate(xid, std::move(dx));
                          });
}

Var SumAll(Var x) {
  const std::size_t xid = x.id();
  return x.tape()->Record(Tensor::Scalar(dsen::Sum(x.value())), {x},
                          [xid](Tape& t, const Tensor& g) {
                            t.Accumulate(xid, Tensor(t.ValueAt(xid).shape(), g[0]));
                          });
}

Var RowDot(Var a, Var b) {
  Tape& tape = SameTape(a, b, "row_dot");
  RequireSameShape(a, b, "row_dot");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t rows = av.rows(), cols = av.cols();
  Tensor out({rows, 1});
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += av[r * cols + c] * bv[r * cols + c];
    out[r] = s;
  }
  const std::size_t aid = a.id(), bid = b.id();
  return tape.Record(std::move(out), {a, b},
                     [aid, bid, rows, cols](Tape& t, const Tensor& g) {
                       auto push = [&](std::size_t target, std::size_t other) {
                         if (!t.RequiresGrad(target)) return;
                         const Tensor& ov = t.ValueAt(other);
                         Tensor d(ov.shape());
                         for (std::size_t r = 0; r < rows; ++r) {
                           for (std::size_t c = 0; c < cols; ++c) {
                             d[r * cols + c] = g[r] * ov[r * cols + c];
                           }
                         }
                         t.Accumulate(target, std::move(d));
                       };
                       push(aid, bid);
                       push(bid, aid);
                     });
}

Var ScaleRows(Var x, Var column) {
  Tape& tape = SameTape(x, column, "scale_rows");
  const Tensor& xv = x.value();
  const Tensor& cv = column.value();
  const std::size_t rows = xv.rows(), cols = xv.cols();
  if (cv.size() != rows) {
    throw DimensionError("scale_rows: column " + ShapeString(cv.shape()) +
                         " does not match " + ShapeString(xv.shape()));
  }
  Tensor out(xv.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = xv[r * cols + c] * cv[r];
  }
  const std::size_t xid = x.id(), cid = column.id();
  return tape.Record(std::move(out), {x, column},
                     [xid, cid, rows, cols](Tape& t, const Tensor& g) {
                       const Tensor& xv = t.ValueAt(xid);
                       const Tensor& cv = t.ValueAt(cid);
                       if (t.RequiresGrad(xid)) {
                         Tensor dx(xv.shape());
                         for (std::size_t r = 0; r < rows; ++r) {
                           for (std::size_t c = 0; c < cols; ++c) {
                             dx[r * cols + c] = g[r * cols + c] * cv[r];
                           }
                         }
                         t.Accumulate(xid, std::move(dx));
                       }
                       if (t.RequiresGrad(cid)) {
                         Tensor dc(cv.shape());
                         for (std::size_t r = 0; r < rows; ++r) {
                           double s = 0.0;
                           for (std::size_t c = 0; c < cols; ++c) {
                             s += g[r * cols + c] * xv[r * cols + c];
                           }
                           dc[r] = s;
                         }
                         t.Accumulate(cid, std::move(dc));
                       }
                     });
}

Var BinaryCrossEntropy(Var probs, std::span<const double> labels) {
  const Tensor& pv = probs.value();
  if (pv.size() != labels.size()) {
    throw ContractError("bce: " + std::to_string(pv.size()) + " predictions vs " +
                        std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw ContractError("bce: empty batch");
  const double n = static_cast<double>(labels.size());
  double loss = 0.0;
  std::vector<double> clamped(pv.size());
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double p = std::clamp(pv[i], kProbClamp, 1.0 - kProbClamp);
    clamped[i] = p;
    loss -= labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p);
  }
  const std::size_t pid = probs.id();
  std::vector<double> y(labels.begin(), labels.end());
  return probs.tape()->Record(
      Tensor::Scalar(loss / n), {probs},
      [pid, n, clamped = std::move(clamped), y = std::move(y)](Tape& t,
                                                               const Tensor& g) {
        Tensor dp(t.ValueAt(pid).shape());
        for (std::size_t i = 0; i < dp.size(); ++i) {
          const double p = clamped[i];
          dp[i] = g[0] * (-(y[i] / p) + (1.0 - y[i]) / (1.0 - p)) / n;
        }
        t.Accumulate(pid, std::move(dp));
      });
}

}  // namespace dsen
