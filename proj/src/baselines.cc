#include "dsen/baselines.h"

namespace dsen {
namespace {

std::size_t HeadsDividing(std::size_t d_model, std::size_t heads) {
  return (heads > 0 && d_model % heads == 0) ? heads : 1;
}

// Pair representation of the two-tower baselines.
Var TowerPairHead(Tape& tape, Var source, Var target, const PairBatch& batch,
                  const DenseLayer& head) {
  const Var parts[] = {source, tape.Constant(batch.source_profile), target,
                       tape.Constant(batch.target_profile), tape.Constant(batch.link)};
  return DenseForward(ConcatCols(parts), head);
}

Var AttentionTower(const TowerInput& tower, const AttentionBaselineParams& p) {
  const std::vector<Var> encoded = AddPositionalEncoding(tower.steps);
  const Var last = SelfAttention(encoded, p.attention, /*last_only=*/true).back();
  return DenseForward(last, p.feed_forward);
}

}  // namespace

std::size_t MlpBaselineParams::InputWidth(const ModelDims& dims) {
  return 2 * (dims.window * dims.seq_features + dims.profile_features) +
         dims.link_features;
}

MlpBaselineParams::MlpBaselineParams(const ModelDims& dims) {
  std::size_t width = InputWidth(dims);
  for (std::size_t h : dims.mlp_hidden) {
    hidden.emplace_back(width, h, Activation::kRelu);
    width = h;
  }
  head = DenseLayer(width, 1, Activation::kSigmoid);
}

GruBaselineParams::GruBaselineParams(const ModelDims& dims)
    : gru(MakeGruStack(dims.seq_features, dims.gru_hidden, dims.gru_layers)),
      head(2 * dims.embedding_width() + dims.link_features, 1, Activation::kSigmoid) {}

std::size_t AttentionBaselineParams::Heads(const ModelDims& dims) {
  return HeadsDividing(dims.seq_features, dims.attention_heads);
}

AttentionBaselineParams::AttentionBaselineParams(const ModelDims& dims)
    : attention(dims.seq_features, Heads(dims)),
      feed_forward(dims.seq_features, dims.gru_hidden, Activation::kRelu),
      head(2 * dims.embedding_width() + dims.link_features, 1, Activation::kSigmoid) {}

std::size_t DsenAttParams::Heads(const ModelDims& dims) {
  return HeadsDividing(dims.views, dims.attention_heads);
}

DsenAttParams::DsenAttParams(const ModelDims& dims)
    : gru(MakeGruStack(dims.seq_features, dims.gru_hidden, dims.gru_layers)),
      views({dims.embedding_width(), dims.views}),
      view_bias({dims.views}),
      attention(dims.views, Heads(dims)),
      feed_forward(dims.views, dims.evolution_hidden, Activation::kRelu),
      head_weight({dims.evolution_hidden + dims.link_features, 1}),
      head_bias({1}) {}

Var FlattenPair(Tape& tape, const PairBatch& batch) {
  std::vector<Var> parts;
  for (const Tensor& s : batch.source_steps) parts.push_back(tape.Constant(s));
  parts.push_back(tape.Constant(batch.source_profile));
  for (const Tensor& s : batch.target_steps) parts.push_back(tape.Constant(s));
  parts.push_back(tape.Constant(batch.target_profile));
  parts.push_back(tape.Constant(batch.link));
  return ConcatCols(parts);
}

Var MlpBaselineForward(Tape& tape, const PairBatch& batch, const MlpBaselineParams& p) {
  const Var x = FlattenPair(tape, batch);
  const std::size_t want = p.hidden.empty() ? p.head.weight.rows()
                                            : p.hidden.front().weight.rows();
  if (x.value().cols() != want) {
    throw DimensionError("mlp baseline: flattened input width " +
                         std::to_string(x.value().cols()) + " != " + std::to_string(want));
  }
  return DenseForward(MlpForward(x, p.hidden), p.head);
}

Var GruBaselineForward(Tape& tape, const PairBatch& batch, const GruBaselineParams& p) {
  const Var h_i = GruSequence(SourceTower(tape, batch).steps, p.gru).back();
  const Var h_j = GruSequence(TargetTower(tape, batch).steps, p.gru).back();
  return TowerPairHead(tape, h_i, h_j, batch, p.head);
}

Var AttentionBaselineForward(Tape& tape, const PairBatch& batch,
                             const AttentionBaselineParams& p) {
  const Var a_i = AttentionTower(SourceTower(tape, batch), p);
  const Var a_j = AttentionTower(TargetTower(tape, batch), p);
  return TowerPairHead(tape, a_i, a_j, batch, p.head);
}

Var DsenAttForward(Tape& tape, const PairBatch& batch, const DsenAttParams& p) {
  const std::vector<Var> g =
      SimilaritySequence(tape, batch, p.gru, p.views, p.view_bias);
  const std::vector<Var> encoded = AddPositionalEncoding(g);
  const Var last = SelfAttention(encoded, p.attention, /*last_only=*/true).back();
  const Var pooled = DenseForward(last, p.feed_forward);
  return PredictProbability(pooled, tape.Constant(batch.link), tape.Param(p.head_weight),
                            tape.Param(p.head_bias));
}

}  // namespace dsen
