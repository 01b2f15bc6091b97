#include "dsen/layers.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

namespace dsen {
namespace {

void RequireShape(const Tensor& t, const Shape& want, const std::string& what) {
  if (t.shape() != want) {
    throw DimensionError(what + ": expected " + ShapeString(want) + ", got " +
                         ShapeString(t.shape()));
  }
}

Var Gate(Tape& tape, Var input, const Tensor& w, const Tensor& b) {
  return AddBias(MatMulTransposedB(input, tape.Param(w)), tape.Param(b));
}

Var Concat2(Var a, Var b) {
  const Var parts[] = {a, b};
  return ConcatCols(parts);
}

void RequireCols(Var v, std::size_t cols, const char* what) {
  if (v.value().cols() != cols) {
    throw DimensionError(std::string(what) + ": expected width " + std::to_string(cols) +
                         ", got " + ShapeString(v.shape()));
  }
}

Tensor AsRow(const Tensor& v) { return v.Reshaped({1, v.size()}); }

}  // namespace

GruCellParams::GruCellParams(std::size_t input_size, std::size_t hidden_size)
    : w_update({hidden_size, input_size + hidden_size}),
      w_reset({hidden_size, input_size + hidden_size}),
      w_candidate({hidden_size, input_size + hidden_size}),
      b_update({hidden_size}),
      b_reset({hidden_size}),
      b_candidate({hidden_size}) {}

void GruCellParams::Validate() const {
  if (w_update.rank() != 2 || w_update.rows() == 0 ||
      w_update.cols() <= w_update.rows()) {
    throw DimensionError("gru: malformed update weight " +
                         ShapeString(w_update.shape()));
  }
  const Shape w = w_update.shape();
  const Shape b{hidden_size()};
  RequireShape(w_reset, w, "gru w_reset");
  RequireShape(w_candidate, w, "gru w_candidate");
  RequireShape(b_update, b, "gru b_update");
  RequireShape(b_reset, b, "gru b_reset");
  RequireShape(b_candidate, b, "gru b_candidate");
}

GruStack MakeGruStack(std::size_t input_size, std::size_t hidden_size,
                      std::size_t num_layers) {
  if (num_layers == 0) throw ContractError("gru stack needs at least one layer");
  GruStack stack;
  for (std::size_t l = 0; l < num_layers; ++l) {
    stack.emplace_back(l == 0 ? input_size : hidden_size, hidden_size);
  }
  return stack;
}

LstmParams::LstmParams(std::size_t input_size, std::size_t hidden_size)
    : w_input({hidden_size, input_size + hidden_size}),
      w_forget({hidden_size, input_size + hidden_size}),
      w_output({hidden_size, input_size + hidden_size}),
      w_candidate({hidden_size, input_size + hidden_size}),
      b_input({hidden_size}),
      b_forget({hidden_size}),
      b_output({hidden_size}),
      b_candidate({hidden_size}) {}

void LstmParams::Validate() const {
  if (w_input.rank() != 2 || w_input.rows() == 0 || w_input.cols() <= w_input.rows()) {
    throw DimensionError("lstm: malformed input-gate weight " +
                         ShapeString(w_input.shape()));
  }
  const Shape w = w_input.shape();
  const Shape b{hidden_size()};
  RequireShape(w_forget, w, "lstm w_forget");
  RequireShape(w_output, w, "lstm w_output");
  RequireShape(w_candidate, w, "lstm w_candidate");
  RequireShape(b_input, b, "lstm b_input");
  RequireShape(b_forget, b, "lstm b_forget");
  RequireShape(b_output, b, "lstm b_output");
  RequireShape(b_candidate, b, "lstm b_candidate");
}

DenseLayer::DenseLayer(std::size_t input_size, std::size_t output_size, Activation act)
    : weight({input_size, output_size}), bias({output_size}), activation(act) {}

AttentionParams::AttentionParams(std::size_t d_model, std::size_t heads) {
  if (heads == 0 || d_model % heads != 0) {
    throw DimensionError("attention: d_model " + std::to_string(d_model) +
                         " is not divisible by " + std::to_string(heads) + " heads");
  }
  const std::size_t d_k = d_model / heads;
  for (std::size_t h = 0; h < heads; ++h) {
    query.emplace_back(Shape{d_model, d_k});
    key.emplace_back(Shape{d_model, d_k});
    value.emplace_back(Shape{d_model, d_k});
  }
  w_mix = Tensor({heads * d_k, d_model});
}

void AttentionParams::Validate() const {
  if (query.empty() || key.size() != query.size() || value.size() != query.size()) {
    throw DimensionError("attention: inconsistent head count");
  }
  const Shape proj = query.front().shape();
  for (std::size_t h = 0; h < query.size(); ++h) {
    RequireShape(query[h], proj, "attention query");
    RequireShape(key[h], proj, "attention key");
    RequireShape(value[h], proj, "attention value");
  }
  if (proj.size() != 2 || heads() * d_k() != proj[0]) {
    throw DimensionError("attention: heads x d_k must equal d_model, got " +
                         std::to_string(heads()) + " x " + ShapeString(proj));
  }
  RequireShape(w_mix, {heads() * d_k(), proj[0]}, "attention w_mix");
}

Var ApplyActivation(Var x, Activation act) {
  switch (act) {
    case Activation::kIdentity:
      return x;
    case Activation::kRelu:
      return Relu(x);
    case Activation::kSigmoid:
      return Sigmoid(x);
    case Activation::kTanh:
      return Tanh(x);
  }
  return x;
}

Var GruCell(Var x, Var h_prev, const GruCellParams& p) {
  p.Validate();
  RequireCols(x, p.input_size(), "gru_cell input");
  RequireCols(h_prev, p.hidden_size(), "gru_cell state");
  Tape& tape = *x.tape();
  const Var xh = Concat2(x, h_prev);
  const Var update = Sigmoid(Gate(tape, xh, p.w_update, p.b_update));
  const Var reset = Sigmoid(Gate(tape, xh, p.w_reset, p.b_reset));
  const Var candidate =
      Tanh(Gate(tape, Concat2(x, Hadamard(reset, h_prev)), p.w_candidate, p.b_candidate));
  return Add(Hadamard(update, h_prev), Hadamard(OneMinus(update), candidate));
}

std::vector<Var> GruSequence(std::span<const Var> steps, const GruStack& stack) {
  if (steps.empty()) throw ContractError("gru_sequence: empty sequence");
  if (stack.empty()) throw ContractError("gru_sequence: num_layers must be >= 1");
  Tape& tape = *steps.front().tape();
  const std::size_t batch = steps.front().value().rows();
  std::vector<Var> current(steps.begin(), steps.end());
  for (const GruCellParams& layer : stack) {
    Var h = tape.Constant(Tensor({batch, layer.hidden_size()}));
    std::vector<Var> next;
    next.reserve(current.size());
    for (Var x : current) {
      h = GruCell(x, h, layer);
      next.push_back(h);
    }
    current = std::move(next);
  }
  return current;
}

std::pair<Var, Var> LstmCell(Var x, Var h_prev, Var c_prev, const LstmParams& p) {
  p.Validate();
  RequireCols(x, p.input_size(), "lstm_cell input");
  RequireCols(h_prev, p.hidden_size(), "lstm_cell hidden state");
  RequireCols(c_prev, p.hidden_size(), "lstm_cell cell state");
  Tape& tape = *x.tape();
  const Var xh = Concat2(x, h_prev);
  const Var forget = Sigmoid(Gate(tape, xh, p.w_forget, p.b_forget));
  const Var input = Sigmoid(Gate(tape, xh, p.w_input, p.b_input));
  const Var output = Sigmoid(Gate(tape, xh, p.w_output, p.b_output));
  const Var candidate = Tanh(Gate(tape, xh, p.w_candidate, p.b_candidate));
  const Var c = Add(Hadamard(forget, c_prev), Hadamard(input, candidate));
  const Var h = Hadamard(output, Tanh(c));
  return {h, c};
}

Var LstmSequence(std::span<const Var> steps, const LstmParams& p) {
  if (steps.empty()) throw ContractError("lstm_sequence: empty sequence");
  Tape& tape = *steps.front().tape();
  const std::size_t batch = steps.front().value().rows();
  Var h = tape.Constant(Tensor({batch, p.hidden_size()}));
  Var c = h;
  for (Var x : steps) std::tie(h, c) = LstmCell(x, h, c, p);
  return h;
}

Var DenseForward(Var x, const DenseLayer& layer) {
  Tape& tape = *x.tape();
  if (layer.weight.rank() != 2 || layer.bias.size() != layer.weight.cols()) {
    throw DimensionError("dense: weight " + ShapeString(layer.weight.shape()) +
                         " and bias " + ShapeString(layer.bias.shape()) + " disagree");
  }
  const Var pre = AddBias(MatMul(x, tape.Param(layer.weight)), tape.Param(layer.bias));
  return ApplyActivation(pre, layer.activation);
}

Var MlpForward(Var x, const Mlp& layers) {
  for (const DenseLayer& layer : layers) x = DenseForward(x, layer);
  return x;
}

AttentionOutput SelfAttentionHeads(std::span<const Var> sequence,
                                   const AttentionParams& p, bool last_only) {
  if (sequence.empty()) throw ContractError("self_attention: empty sequence");
  p.Validate();
  for (Var e : sequence) RequireCols(e, p.d_model(), "self_attention input");
  Tape& tape = *sequence.front().tape();
  const std::size_t steps = sequence.size();
  const double scale = 1.0 / std::sqrt(static_cast<double>(p.d_k()));
  const std::size_t first_query = last_only ? steps - 1 : 0;

  AttentionOutput result;
  result.heads.resize(p.heads());
  for (std::size_t h = 0; h < p.heads(); ++h) {
    const Var wq = tape.Param(p.query[h]);
    const Var wk = tape.Param(p.key[h]);
    const Var wv = tape.Param(p.value[h]);
    std::vector<Var> keys, values;
    for (Var e : sequence) {
      keys.push_back(MatMul(e, wk));
      values.push_back(MatMul(e, wv));
    }
    for (std::size_t q = first_query; q < steps; ++q) {
      const Var query = MatMul(sequence[q], wq);
      std::vector<Var> scores;
      for (const Var& k : keys) scores.push_back(Scale(RowDot(query, k), scale));
      const Var weights = SoftmaxRows(ConcatCols(scores));
      Var mixed = ScaleRows(values[0], SliceCols(weights, 0, 1));
      for (std::size_t s = 1; s < steps; ++s) {
        mixed = Add(mixed, ScaleRows(values[s], SliceCols(weights, s, s + 1)));
      }
      result.heads[h].push_back(mixed);
    }
  }

  const Var w_mix = tape.Param(p.w_mix);
  for (std::size_t q = 0; q < result.heads.front().size(); ++q) {
    std::vector<Var> parts;
    for (std::size_t h = 0; h < p.heads(); ++h) parts.push_back(result.heads[h][q]);
    result.outputs.push_back(MatMul(ConcatCols(parts), w_mix));
  }
  return result;
}

std::vector<Var> SelfAttention(std::span<const Var> sequence, const AttentionParams& p,
                               bool last_only) {
  return SelfAttentionHeads(sequence, p, last_only).outputs;
}

Tensor PositionalEncoding(std::size_t t, std::size_t d_model) {
  Tensor pe({d_model});
  for (std::size_t j = 0; j < d_model; ++j) {
    const double i2 = static_cast<double>(j - j % 2);
    const double angle =
        static_cast<double>(t) / std::pow(10000.0, i2 / static_cast<double>(d_model));
    pe[j] = (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
  }
  return pe;
}

std::vector<Var> AddPositionalEncoding(std::span<const Var> sequence) {
  std::vector<Var> out;
  out.reserve(sequence.size());
  for (std::size_t s = 0; s < sequence.size(); ++s) {
    const Tensor& v = sequence[s].value();
    const Tensor pe = PositionalEncoding(s, v.cols());
    Tensor tiled(v.shape());
    for (std::size_t r = 0; r < v.rows(); ++r) {
      std::copy(pe.data().begin(), pe.data().end(),
                tiled.mutable_data().begin() + r * v.cols());
    }
    out.push_back(Add(sequence[s], sequence[s].tape()->Constant(std::move(tiled))));
  }
  return out;
}

Tensor GruCell(const Tensor& x, const Tensor& h_prev, const GruCellParams& p) {
  Tape tape;
  return GruCell(tape.Constant(AsRow(x)), tape.Constant(AsRow(h_prev)), p)
      .value()
      .Reshaped({p.hidden_size()});
}

Tensor GruSequence(const Tensor& x, const GruStack& stack) {
  if (x.rank() != 2 || x.rows() == 0) {
    throw ContractError("gru_sequence: expected a non-empty t x d matrix, got " +
                        ShapeString(x.shape()));
  }
  Tape tape;
  std::vector<Var> steps;
  for (std::size_t s = 0; s < x.rows(); ++s) steps.push_back(tape.Constant(AsRow(x.Row(s))));
  std::vector<Tensor> rows;
  for (Var h : GruSequence(steps, stack)) rows.push_back(h.value());
  return StackRows(rows);
}

std::pair<Tensor, Tensor> LstmCell(const Tensor& x, const Tensor& h_prev,
                                   const Tensor& c_prev, const LstmParams& p) {
  Tape tape;
  auto [h, c] = LstmCell(tape.Constant(AsRow(x)), tape.Constant(AsRow(h_prev)),
                         tape.Constant(AsRow(c_prev)), p);
  return {h.value().Reshaped({p.hidden_size()}), c.value().Reshaped({p.hidden_size()})};
}

Tensor LstmSequence(const Tensor& g, const LstmParams& p) {
  if (g.rank() != 2 || g.rows() == 0) {
    throw ContractError("lstm_sequence: expected a non-empty t x k matrix, got " +
                        ShapeString(g.shape()));
  }
  Tape tape;
  std::vector<Var> steps;
  for (std::size_t s = 0; s < g.rows(); ++s) steps.push_back(tape.Constant(AsRow(g.Row(s))));
  return LstmSequence(steps, p).value().Reshaped({p.hidden_size()});
}

Tensor MlpForward(const Tensor& x, const Mlp& layers) {
  Tape tape;
  const bool vector_in = x.rank() == 1;
  const Tensor out = MlpForward(tape.Constant(vector_in ? AsRow(x) : x), layers).value();
  return vector_in ? out.Reshaped({out.size()}) : out;
}

Tensor SelfAttention(const Tensor& e, const AttentionParams& p) {
  if (e.rank() != 2 || e.rows() == 0) {
    throw ContractError("self_attention: expected a non-empty T x d_model matrix, got " +
                        ShapeString(e.shape()));
  }
  Tape tape;
  std::vector<Var> seq;
  for (std::size_t s = 0; s < e.rows(); ++s) seq.push_back(tape.Constant(AsRow(e.Row(s))));
  std::vector<Tensor> rows;
  for (Var o : SelfAttention(seq, p)) rows.push_back(o.value());
  return StackRows(rows);
}

}  // namespace dsen
