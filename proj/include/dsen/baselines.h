#pragma once

#include "dsen/dsen_model.h"

namespace dsen {

// Fully connected ReLU stack over the flattened pair
// [S_i ∥ R_i ∥ S_j ∥ R_j ∥ l_ij], then a sigmoid head.
struct MlpBaselineParams {
  Mlp hidden;
  DenseLayer head;

  MlpBaselineParams() = default;
  explicit MlpBaselineParams(const ModelDims& dims);

  static std::size_t InputWidth(const ModelDims& dims);

  template <class F>
  void ForEachParam(F&& f) {
    dsen::ForEachParam(hidden, "mlp.", f);
    head.ForEachParam("head.", f);
  }
};

// Shared GRU tower per user; [h_i ∥ R_i ∥ h_j ∥ R_j ∥ l_ij] into one sigmoid
// layer.
struct GruBaselineParams {
  GruStack gru;
  DenseLayer head;

  GruBaselineParams() = default;
  explicit GruBaselineParams(const ModelDims& dims);

  template <class F>
  void ForEachParam(F&& f) {
    dsen::ForEachParam(gru, "gru.", f);
    head.ForEachParam("head.", f);
  }
};

// Shared self-attention tower over positionally encoded daily features; the
// last position passes through a pointwise feed-forward layer and replaces the
// GRU state of the GRU baseline.
struct AttentionBaselineParams {
  AttentionParams attention;
  DenseLayer feed_forward;
  DenseLayer head;

  AttentionBaselineParams() = default;
  explicit AttentionBaselineParams(const ModelDims& dims);

  // heads when they divide seq_features, otherwise 1.
  static std::size_t Heads(const ModelDims& dims);

  template <class F>
  void ForEachParam(F&& f) {
    attention.ForEachParam("attention.", f);
    feed_forward.ForEachParam("ffn.", f);
    head.ForEachParam("head.", f);
  }
};

// DSEN with the evolution LSTM replaced by positional encoding,
// self-attention, last-position pooling and a pointwise feed-forward layer.
struct DsenAttParams {
  GruStack gru;
  Tensor views;
  Tensor view_bias;
  AttentionParams attention;  // d_model = views
  DenseLayer feed_forward;    // views → evolution_hidden, ReLU
  Tensor head_weight;         // (evolution_hidden + link_features) × 1
  Tensor head_bias;

  DsenAttParams() = default;
  explicit DsenAttParams(const ModelDims& dims);

  static std::size_t Heads(const ModelDims& dims);

  template <class F>
  void ForEachParam(F&& f) {
    dsen::ForEachParam(gru, "gru.", f);
    f("views", views);
    f("view_bias", view_bias);
    attention.ForEachParam("attention.", f);
    feed_forward.ForEachParam("ffn.", f);
    f("head.weight", head_weight);
    f("head.bias", head_bias);
  }
};

// All forwards return batch×1 probabilities.
Var MlpBaselineForward(Tape& tape, const PairBatch& batch, const MlpBaselineParams& p);
Var GruBaselineForward(Tape& tape, const PairBatch& batch, const GruBaselineParams& p);
Var AttentionBaselineForward(Tape& tape, const PairBatch& batch,
                             const AttentionBaselineParams& p);
Var DsenAttForward(Tape& tape, const PairBatch& batch, const DsenAttParams& p);

// Flattened MLP input for a batch (exposed for tests).
Var FlattenPair(Tape& tape, const PairBatch& batch);

}  // namespace dsen
