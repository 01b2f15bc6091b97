#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dsen/tape.h"
#include "dsen/tensor.h"

namespace dsen {

// GRU cell with one weight matrix per gate over the concatenation [x; h].
// Weights are hidden×(input+hidden), biases have hidden entries.
struct GruCellParams {
  Tensor w_update, w_reset, w_candidate;
  Tensor b_update, b_reset, b_candidate;

  GruCellParams() = default;
  GruCellParams(std::size_t input_size, std::size_t hidden_size);

  std::size_t input_size() const { return w_update.cols() - hidden_size(); }
  std::size_t hidden_size() const { return w_update.rows(); }
  void Validate() const;

  template <class F>
  void ForEachParam(const std::string& prefix, F&& f) {
    f(prefix + "w_update", w_update);
    f(prefix + "w_reset", w_reset);
    f(prefix + "w_candidate", w_candidate);
    f(prefix + "b_update", b_update);
    f(prefix + "b_reset", b_reset);
    f(prefix + "b_candidate", b_candidate);
  }
};

// Layer l consumes the hidden sequence of layer l-1.
using GruStack = std::vector<GruCellParams>;

GruStack MakeGruStack(std::size_t input_size, std::size_t hidden_size,
                      std::size_t num_layers);

template <class F>
void ForEachParam(GruStack& stack, const std::string& prefix, F&& f) {
  for (std::size_t l = 0; l < stack.size(); ++l) {
    stack[l].ForEachParam(prefix + "layer" + std::to_string(l) + ".", f);
  }
}

// Standard LSTM without peepholes. Gate weights hidden×(input+hidden).
struct LstmParams {
  Tensor w_input, w_forget, w_output, w_candidate;
  Tensor b_input, b_forget, b_output, b_candidate;

  LstmParams() = default;
  LstmParams(std::size_t input_size, std::size_t hidden_size);

  std::size_t input_size() const { return w_input.cols() - hidden_size(); }
  std::size_t hidden_size() const { return w_input.rows(); }
  void Validate() const;

  template <class F>
  void ForEachParam(const std::string& prefix, F&& f) {
    f(prefix + "w_input", w_input);
    f(prefix + "w_forget", w_forget);
    f(prefix + "w_output", w_output);
    f(prefix + "w_candidate", w_candidate);
    f(prefix + "b_input", b_input);
    f(prefix + "b_forget", b_forget);
    f(prefix + "b_output", b_output);
    f(prefix + "b_candidate", b_candidate);
  }
};

enum class Activation { kIdentity, kRelu, kSigmoid, kTanh };

// y = act(xᵀ W + b) with W stored input×output.
struct DenseLayer {
  Tensor weight;
  Tensor bias;
  Activation activation = Activation::kIdentity;

  DenseLayer() = default;
  DenseLayer(std::size_t input_size, std::size_t output_size, Activation act);

  template <class F>
  void ForEachParam(const std::string& prefix, F&& f) {
    f(prefix + "weight", weight);
    f(prefix + "bias", bias);
  }
};

using Mlp = std::vector<DenseLayer>;

template <class F>
void ForEachParam(Mlp& mlp, const std::string& prefix, F&& f) {
  for (std::size_t l = 0; l < mlp.size(); ++l) {
    mlp[l].ForEachParam(prefix + "dense" + std::to_string(l) + ".", f);
  }
}

// Multi-head self-attention. Each head projects d_model → d_k with its own
// query/key/value matrices; concatenated heads (heads·d_k) mix back to
// d_model through w_mix.
struct AttentionParams {
  std::vector<Tensor> query, key, value;
  Tensor w_mix;

  AttentionParams() = default;
  AttentionParams(std::size_t d_model, std::size_t heads);

  std::size_t heads() const { return query.size(); }
  std::size_t d_model() const { return w_mix.cols(); }
  std::size_t d_k() const { return query.empty() ? 0 : query.front().cols(); }
  void Validate() const;

  template <class F>
  void ForEachParam(const std::string& prefix, F&& f) {
    for (std::size_t h = 0; h < query.size(); ++h) {
      const std::string p = prefix + "head" + std::to_string(h) + ".";
      f(p + "query", query[h]);
      f(p + "key", key[h]);
      f(p + "value", value[h]);
    }
    f(prefix + "w_mix", w_mix);
  }
};

// Batched tape versions: every Var is batch×features, one example per row.
Var ApplyActivation(Var x, Activation act);
Var GruCell(Var x, Var h_prev, const GruCellParams& p);
// Zero initial state; returns the top-layer hidden state for each step.
std::vector<Var> GruSequence(std::span<const Var> steps, const GruStack& stack);
std::pair<Var, Var> LstmCell(Var x, Var h_prev, Var c_prev, const LstmParams& p);
// Zero initial states; returns the final hidden state.
Var LstmSequence(std::span<const Var> steps, const LstmParams& p);
Var DenseForward(Var x, const DenseLayer& layer);
Var MlpForward(Var x, const Mlp& layers);

struct AttentionOutput {
  // Per query position, the mixed output (batch×d_model).
  std::vector<Var> outputs;
  // heads[h][q]: head h output at query position q before mixing (batch×d_k).
  std::vector<std::vector<Var>> heads;
};

// Self-attention over a sequence given as one batch×d_model Var per position.
// When last_only is set, only the final position is used as a query.
AttentionOutput SelfAttentionHeads(std::span<const Var> sequence,
                                   const AttentionParams& p, bool last_only = false);
std::vector<Var> SelfAttention(std::span<const Var> sequence, const AttentionParams& p,
                               bool last_only = false);

// Adds the sinusoidal encoding of step index s to each step (broadcast over
// the batch).
std::vector<Var> AddPositionalEncoding(std::span<const Var> sequence);

// Unbatched convenience forms on plain tensors.
Tensor GruCell(const Tensor& x, const Tensor& h_prev, const GruCellParams& p);
// x is t×d; returns t×hidden.
Tensor GruSequence(const Tensor& x, const GruStack& stack);
std::pair<Tensor, Tensor> LstmCell(const Tensor& x, const Tensor& h_prev,
                                   const Tensor& c_prev, const LstmParams& p);
// g is t×k; returns the final hidden state.
Tensor LstmSequence(const Tensor& g, const LstmParams& p);
Tensor MlpForward(const Tensor& x, const Mlp& layers);
// e is T×d_model; returns T×d_model.
Tensor SelfAttention(const Tensor& e, const AttentionParams& p);

// sin(t / 10000^(2i/d)) at index 2i, cos(t / 10000^(2i/d)) at index 2i+1.
Tensor PositionalEncoding(std::size_t t, std::size_t d_model);

}  // namespace dsen
